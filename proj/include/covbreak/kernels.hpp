#pragma once

// Data-parallel inner loops shared by the statistics engine, the bootstrap and
// the online detector. Every kernel is defined coordinate-wise (the only
// cross-coordinate reduction is max, which is exact), so the scalar reference
// and the SIMD variants produce bit-identical results; the equivalence suite
// asserts exactly that. Backend selection happens once at startup and can be
// overridden with COVBREAK_KERNEL=scalar|avx2 or set_backend().

namespace covbreak::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
    // out[flat(j,k)] = x[j] * x[k] for j <= k, row-major over the upper triangle.
    void (*outer_upper)(const double* x, int p, double* out);
    // acc[c] += v[c]
    void (*add)(double* acc, const double* v, int d);
    // acc[c] -= v[c]
    void (*sub)(double* acc, const double* v, int d);
    // acc[c] += (v[c] - mean[c])^2
    void (*add_sq_dev)(double* acc, const double* v, const double* mean, int d);
    // max over c of |a[c] - b[c]| * w[c]; 0 for d == 0 or all-zero weights.
    double (*max_weighted_absdiff)(const double* a, const double* b, const double* w, int d);
};

extern const Ops scalar_ops;
#if defined(__x86_64__) || defined(__i386__)
extern const Ops avx2_ops;
#endif

// The currently selected kernel table.
const Ops& active();
Backend active_backend();

// True when the CPU can run the given backend.
bool backend_supported(Backend b);

// Select a backend explicitly; returns false (and keeps the current
// selection) when the CPU does not support it. Not meant to be called
// while kernels are executing on other threads.
bool set_backend(Backend b);

const char* backend_name(Backend b);

}  // namespace covbreak::kernels
