#include <cmath>
#include <cstdint>

#include "covbreak/kernels.hpp"

// Reference kernels. Plain coordinate-wise loops; the build disables
// floating-point contraction globally so these match the SIMD path bit for
// bit.

namespace covbreak::kernels {

namespace {

void outer_upper_scalar(const double* x, int p, double* out) {
    std::int64_t c = 0;
    for (int j = 0; j < p; ++j) {
        const double xj = x[j];
        for (int k = j; k < p; ++k) out[c++] = xj * x[k];
    }
}

void add_scalar(double* acc, const double* v, int d) {
    for (int c = 0; c < d; ++c) acc[c] += v[c];
}

void sub_scalar(double* acc, const double* v, int d) {
    for (int c = 0; c < d; ++c) acc[c] -= v[c];
}

void add_sq_dev_scalar(double* acc, const double* v, const double* mean, int d) {
    for (int c = 0; c < d; ++c) {
        const double dev = v[c] - mean[c];
        acc[c] += dev * dev;
    }
}

double max_weighted_absdiff_scalar(const double* a, const double* b, const double* w, int d) {
    double m = 0.0;
    for (int c = 0; c < d; ++c) {
        const double v = std::fabs(a[c] - b[c]) * w[c];
        if (v > m) m = v;
    }
    return m;
}

}  // namespace

const Ops scalar_ops = {
    &outer_upper_scalar,
    &add_scalar,
    &sub_scalar,
    &add_sq_dev_scalar,
    &max_weighted_absdiff_scalar,
};

}  // namespace covbreak::kernels
