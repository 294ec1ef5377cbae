#pragma once

#include <cstdint>
#include <vector>

#include "covbreak/types.hpp"

// Statistics engine: per-observation outer products on the deduplicated upper
// triangle, the coordinate scaling estimated on a calibration range, and the
// multiscale family of sup-norm window statistics
//
//   B_n(t) = max over active c of sqrt(n/2) |mean_left[c] - mean_right[c]| / sigma[c],
//
// where the left/right windows around center t (1-based) are {t-n..t-1} and
// {t..t+n-1}, and admissible centers run over {n+1, ..., N-n+1}. Scans are
// incremental (rolling window sums, O(N p^2) per window) with periodic full
// re-accumulation to bound floating-point drift.

namespace covbreak::stats {

// How many slides between full re-accumulations of the rolling sums.
inline constexpr std::int64_t kRefreshInterval = 1024;

// Relative floor under which a coordinate's sigma counts as degenerate.
inline constexpr double kDegeneracyFloor = 1e-12;

// Per-coordinate standard deviations of the outer-product rows, estimated on
// the contiguous calibration range [calib_lo, calib_hi] (1-based, inclusive).
// Coordinates whose sigma falls below kDegeneracyFloor times the largest
// sigma (or below the absolute floor when all sigmas are zero) are inactive
// and never contribute to any statistic.
struct ScalingVector {
    std::int64_t p = 0;
    std::int64_t calib_lo = 0;
    std::int64_t calib_hi = 0;
    std::vector<double> sigma;          // length p(p+1)/2, entries >= 0
    std::vector<std::uint8_t> active;   // 1 = active, 0 = degenerate

    std::int64_t dim() const { return static_cast<std::int64_t>(sigma.size()); }
    std::int64_t s() const { return calib_hi - calib_lo + 1; }
    bool any_active() const {
        for (auto a : active)
            if (a) return true;
        return false;
    }
};

// Upper-triangle outer product of one observation: out[flat(j,k)] = x[j]*x[k].
std::vector<double> vec_outer(const double* x, std::int64_t p);

// All outer-product rows of a sample: N x p(p+1)/2.
Matrix vec_outer_rows(const MultiSample& sample);

// Scaling from the outer-product rows w (N x d) over rows
// [calib_lo, calib_hi] 1-based inclusive; requires at least two rows.
ScalingVector compute_scaling(const Matrix& w, std::int64_t p, std::int64_t calib_lo, std::int64_t calib_hi);
ScalingVector compute_scaling(const MultiSample& sample, std::int64_t calib_lo, std::int64_t calib_hi);

// Per-coordinate weights for window width n:
// active ? 1 / (sqrt(2n) * sigma[c]) : 0. Every statistic path (offline scan,
// online detector, bootstrap) multiplies a window-sum difference by exactly
// this vector, so they agree bit for bit.
std::vector<double> make_weights(const ScalingVector& scaling, std::int64_t n);

// Direct (non-incremental) evaluation of B_n(t) at a single 1-based center
// t in {n+1, ..., N-n+1}; accepts any n >= 1. The incremental scan agrees
// with this to within accumulated roundoff, not bit-exactly.
double statistic_at(const MultiSample& sample, const ScalingVector& scaling, std::int64_t n, std::int64_t t);

// One window's statistics at every admissible center.
struct StatisticsTrace {
    std::int64_t n = 0;
    std::int64_t first_center = 0;      // = n + 1 (1-based)
    std::vector<double> values;         // size N - 2n + 1
    double max_value = 0.0;
    std::int64_t argmax_center = 0;     // smallest center attaining max_value

    std::int64_t center_at(std::int64_t i) const { return first_center + i; }
    std::int64_t num_centers() const { return static_cast<std::int64_t>(values.size()); }
};

// Incremental scan of one window width over the outer-product rows w
// (N x d); requires N >= 2n + 1 so the trace is nonempty.
StatisticsTrace scan_window(const Matrix& w, const ScalingVector& scaling, std::int64_t n);
StatisticsTrace scan_window(const MultiSample& sample, const ScalingVector& scaling, std::int64_t n);

// Scans every width in ascending order.
std::vector<StatisticsTrace> scan_all(const Matrix& w, const ScalingVector& scaling, const WindowSet& windows);
std::vector<StatisticsTrace> scan_all(const MultiSample& sample, const ScalingVector& scaling, const WindowSet& windows);

}  // namespace covbreak::stats
