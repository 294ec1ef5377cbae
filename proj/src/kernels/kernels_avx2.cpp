// AVX2 variants of the data-parallel kernels. This translation unit is the
// only one compiled with -mavx2 (and deliberately not -mfma): every lane does
// exactly the add/sub/mul the scalar reference does, and max is an exact
// selection, so results are bit-identical to the scalar path.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "covbreak/kernels.hpp"

namespace covbreak::kernels {

namespace {

inline __m256d abs_pd(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

void outer_upper_avx2(const double* x, int p, double* out) {
    double* o = out;
    for (int j = 0; j < p; ++j) {
        const __m256d xj = _mm256_set1_pd(x[j]);
        const int len = p - j;
        const double* src = x + j;
        int k = 0;
        for (; k + 4 <= len; k += 4)
            _mm256_storeu_pd(o + k, _mm256_mul_pd(xj, _mm256_loadu_pd(src + k)));
        for (; k < len; ++k) o[k] = x[j] * src[k];
        o += len;
    }
}

void add_avx2(double* acc, const double* v, int d) {
    int c = 0;
    for (; c + 4 <= d; c += 4)
        _mm256_storeu_pd(acc + c, _mm256_add_pd(_mm256_loadu_pd(acc + c), _mm256_loadu_pd(v + c)));
    for (; c < d; ++c) acc[c] += v[c];
}

void sub_avx2(double* acc, const double* v, int d) {
    int c = 0;
    for (; c + 4 <= d; c += 4)
        _mm256_storeu_pd(acc + c, _mm256_sub_pd(_mm256_loadu_pd(acc + c), _mm256_loadu_pd(v + c)));
    for (; c < d; ++c) acc[c] -= v[c];
}

void add_sq_dev_avx2(double* acc, const double* v, const double* mean, int d) {
    int c = 0;
    for (; c + 4 <= d; c += 4) {
        const __m256d dev = _mm256_sub_pd(_mm256_loadu_pd(v + c), _mm256_loadu_pd(mean + c));
        _mm256_storeu_pd(acc + c, _mm256_add_pd(_mm256_loadu_pd(acc + c), _mm256_mul_pd(dev, dev)));
    }
    for (; c < d; ++c) {
        const double dev = v[c] - mean[c];
        acc[c] += dev * dev;
    }
}

double max_weighted_absdiff_avx2(const double* a, const double* b, const double* w, int d) {
    __m256d vmax = _mm256_setzero_pd();
    int c = 0;
    for (; c + 4 <= d; c += 4) {
        const __m256d diff = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + c), _mm256_loadu_pd(b + c)));
        vmax = _mm256_max_pd(vmax, _mm256_mul_pd(diff, _mm256_loadu_pd(w + c)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vmax);
    double m = lanes[0];
    if (lanes[1] > m) m = lanes[1];
    if (lanes[2] > m) m = lanes[2];
    if (lanes[3] > m) m = lanes[3];
    for (; c < d; ++c) {
        const double v = std::fabs(a[c] - b[c]) * w[c];
        if (v > m) m = v;
    }
    return m;
}

}  // namespace

const Ops avx2_ops = {
    &outer_upper_avx2,
    &add_avx2,
    &sub_avx2,
    &add_sq_dev_avx2,
    &max_weighted_absdiff_avx2,
};

}  // namespace covbreak::kernels

#endif  // x86
