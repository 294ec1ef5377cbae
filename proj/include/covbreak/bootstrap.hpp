#pragma once

#include <cstdint>
#include <vector>

#include "covbreak/rng.hpp"
#include "covbreak/stats.hpp"
#include "covbreak/types.hpp"

// Sign-flip bootstrap calibration. Centered outer-product residuals from the
// calibration range are resampled with replacement from the sign-symmetrized
// pool {+Z_i, -Z_i}; each replicate stream of length N is scanned with the
// same rolling-sum machinery and scaling as the real data, yielding one
// max-statistic per window. Per-window thresholds come from empirical
// quantiles at the multiplicity-corrected level alpha*.

namespace covbreak::boot {

// Centered residual rows W_i - mean(W) over the calibration range.
struct ResidualSet {
    Matrix residuals;               // s x d
    std::vector<double> mean_vec;   // d
    std::int64_t calib_lo = 0;      // 1-based inclusive range in the source sample
    std::int64_t calib_hi = 0;

    std::int64_t s() const { return residuals.rows(); }
    std::int64_t dim() const { return residuals.cols(); }
};

ResidualSet compute_residuals(const Matrix& w, std::int64_t calib_lo, std::int64_t calib_hi);
ResidualSet compute_residuals(const MultiSample& sample, std::int64_t calib_lo, std::int64_t calib_hi);

// Fills out (n_rows x d) with rows drawn uniformly with replacement from the
// 2s-element pool {+residual_i, -residual_i}. One bounded draw per row:
// u in [0, 2s), row index u >> 1, sign flipped when u & 1.
void draw_bootstrap_stream(const ResidualSet& residuals, std::int64_t n_rows, rng::Stream& rng, Matrix& out);

// Max window statistic per width (ascending) for one materialized stream:
// B[n] = max over centers t of max over active c of
//        |sum_left[c] - sum_right[c]| / (sqrt(2n) sigma[c]).
std::vector<double> bootstrap_statistic(const Matrix& stream, const stats::ScalingVector& scaling,
                                        const WindowSet& windows);

// Replicate matrix: m rows, one column per window width (ascending).
struct BootstrapMatrix {
    std::int64_t m = 0;
    WindowSet windows;
    std::uint64_t seed = 0;
    std::vector<double> data;  // m x windows.count(), row-major

    double at(std::int64_t b, std::size_t window_idx) const {
        return data[static_cast<std::size_t>(b) * windows.count() + window_idx];
    }
    std::vector<double> column(std::size_t window_idx) const;
};

inline constexpr std::int64_t kMinReplicates = 100;

// Runs m independent replicates (streams of length `horizon`), each with an
// RNG stream derived from (seed, replicate index), so the matrix does not
// depend on the thread count.
BootstrapMatrix run_replicates(const ResidualSet& residuals, const stats::ScalingVector& scaling,
                               const WindowSet& windows, std::int64_t horizon, std::int64_t m,
                               std::uint64_t seed, int threads = 1);

// Plug-in quantile of the inf-definition z(x) = inf{z : P(B > z) <= x} under
// the empirical measure: the ceil(M(1-x))-th ascending order statistic.
// Requires 0 < x < 1. For exact grid levels k/M prefer quantile_grid, which
// takes the integer k and is immune to floating-point rounding of M*x.
double empirical_quantile(const std::vector<double>& column, double x);

// Order-statistic quantile at grid level k/M for k in {1..M}; `sorted` must
// be ascending. k = M yields the column minimum.
double quantile_grid(const std::vector<double>& sorted, std::int64_t k);

// Thresholds plus everything needed to audit or reuse them.
struct CalibrationResult {
    double alpha = 0.0;
    double alpha_star = 0.0;            // largest grid level k*/M with familywise exceedance <= alpha
    bool conservative_floor = false;    // true when even k = 1 violates the constraint
    std::vector<double> thresholds;     // aligned with matrix.windows, ascending n
    BootstrapMatrix matrix;
};

// Chooses alpha* by binary search over the grid {1/M..M/M} (the familywise
// exceedance count is nondecreasing in the level) and evaluates per-window
// thresholds at it. Exceedance is strict (>) throughout.
CalibrationResult multiplicity_correct(const BootstrapMatrix& matrix, double alpha);

// A complete persistable calibration: thresholds bound to the windows,
// scaling, horizon and provenance they were computed under.
struct Calibration {
    double alpha = 0.0;
    double alpha_star = 0.0;
    bool conservative_floor = false;
    WindowSet windows;
    std::vector<double> thresholds;     // aligned with windows
    stats::ScalingVector scaling;
    std::int64_t horizon = 0;           // stream/sample length the thresholds target
    std::uint64_t seed = 0;
    std::int64_t replicates = 0;
};

// End-to-end calibration on a sample: scaling and residuals on
// [calib_lo, calib_hi], replicates against `horizon` (0 = sample length).
Calibration calibrate(const MultiSample& sample, const WindowSet& windows, double alpha, std::int64_t m,
                      std::uint64_t seed, std::int64_t calib_lo = 1, std::int64_t calib_hi = 0,
                      std::int64_t horizon = 0, int threads = 1);

}  // namespace covbreak::boot
