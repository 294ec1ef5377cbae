#include "covbreak/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "covbreak/errors.hpp"
#include "covbreak/parallel.hpp"

namespace covbreak::boot {

namespace {

void check_calib_range(std::int64_t n_rows, std::int64_t lo, std::int64_t hi) {
    if (lo < 1 || hi > n_rows)
        throw OutOfRangeError("calibration range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] outside sample of length " + std::to_string(n_rows));
    if (hi - lo + 1 < 2) throw InsufficientDataError("calibration range must contain at least two rows");
}

}  // namespace

ResidualSet compute_residuals(const Matrix& w, std::int64_t calib_lo, std::int64_t calib_hi) {
    check_calib_range(w.rows(), calib_lo, calib_hi);
    const std::int64_t s = calib_hi - calib_lo + 1;
    const std::int64_t d = w.cols();

    ResidualSet out;
    out.calib_lo = calib_lo;
    out.calib_hi = calib_hi;
    out.mean_vec.assign(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t i = calib_lo - 1; i < calib_hi; ++i) {
        const double* row = w.row(i);
        for (std::int64_t c = 0; c < d; ++c) out.mean_vec[static_cast<std::size_t>(c)] += row[c];
    }
    const double inv_s = 1.0 / static_cast<double>(s);
    for (std::int64_t c = 0; c < d; ++c) out.mean_vec[static_cast<std::size_t>(c)] *= inv_s;

    out.residuals = Matrix(s, d);
    for (std::int64_t i = 0; i < s; ++i) {
        const double* src = w.row(calib_lo - 1 + i);
        double* dst = out.residuals.row(i);
        for (std::int64_t c = 0; c < d; ++c) dst[c] = src[c] - out.mean_vec[static_cast<std::size_t>(c)];
    }
    return out;
}

ResidualSet compute_residuals(const MultiSample& sample, std::int64_t calib_lo, std::int64_t calib_hi) {
    return compute_residuals(stats::vec_outer_rows(sample), calib_lo, calib_hi);
}

void draw_bootstrap_stream(const ResidualSet& residuals, std::int64_t n_rows, rng::Stream& rng, Matrix& out) {
    const std::int64_t s = residuals.s();
    const std::int64_t d = residuals.dim();
    if (s < 1) throw InsufficientDataError("residual set is empty");
    if (n_rows < 1) throw InvalidInputError("bootstrap stream length must be >= 1");
    if (out.rows() != n_rows || out.cols() != d) out = Matrix(n_rows, d);
    const std::uint64_t pool = static_cast<std::uint64_t>(2 * s);
    for (std::int64_t r = 0; r < n_rows; ++r) {
        const std::uint64_t u = rng.bounded(pool);
        const std::int64_t idx = static_cast<std::int64_t>(u >> 1);
        const double* src = residuals.residuals.row(idx);
        double* dst = out.row(r);
        if (u & 1) {
            for (std::int64_t c = 0; c < d; ++c) dst[c] = -src[c];
        } else {
            std::memcpy(dst, src, static_cast<std::size_t>(d) * sizeof(double));
        }
    }
}

std::vector<double> bootstrap_statistic(const Matrix& stream, const stats::ScalingVector& scaling,
                                        const WindowSet& windows) {
    if (stream.rows() < windows.min_sample_size())
        throw SampleTooShortError("bootstrap stream of length " + std::to_string(stream.rows()) +
                                  " is shorter than " + std::to_string(windows.min_sample_size()) +
                                  " required by the largest window");
    std::vector<double> maxima;
    maxima.reserve(windows.count());
    for (const std::int64_t n : windows.widths()) maxima.push_back(stats::scan_window(stream, scaling, n).max_value);
    return maxima;
}

std::vector<double> BootstrapMatrix::column(std::size_t window_idx) const {
    std::vector<double> col(static_cast<std::size_t>(m));
    for (std::int64_t b = 0; b < m; ++b) col[static_cast<std::size_t>(b)] = at(b, window_idx);
    return col;
}

BootstrapMatrix run_replicates(const ResidualSet& residuals, const stats::ScalingVector& scaling,
                               const WindowSet& windows, std::int64_t horizon, std::int64_t m, std::uint64_t seed,
                               int threads) {
    if (m < kMinReplicates)
        throw ConfigError("replicate count " + std::to_string(m) + " below the minimum " +
                          std::to_string(kMinReplicates));
    if (residuals.dim() != scaling.dim())
        throw DimensionMismatchError("residuals and scaling have different coordinate counts");
    if (horizon < windows.min_sample_size())
        throw SampleTooShortError("horizon " + std::to_string(horizon) + " is shorter than " +
                                  std::to_string(windows.min_sample_size()) + " required by the largest window");

    BootstrapMatrix out;
    out.m = m;
    out.windows = windows;
    out.seed = seed;
    const std::size_t k = windows.count();
    out.data.assign(static_cast<std::size_t>(m) * k, 0.0);

    parallel_for(m, threads, [&](std::int64_t b) {
        thread_local Matrix stream;
        rng::Stream rng(rng::derive_seed(seed, static_cast<std::uint64_t>(b)));
        draw_bootstrap_stream(residuals, horizon, rng, stream);
        const std::vector<double> maxima = bootstrap_statistic(stream, scaling, windows);
        std::copy(maxima.begin(), maxima.end(), out.data.begin() + static_cast<std::size_t>(b) * k);
    });
    return out;
}

double empirical_quantile(const std::vector<double>& column, double x) {
    if (column.empty()) throw InvalidInputError("quantile of an empty column");
    if (!(x > 0.0 && x < 1.0)) throw OutOfRangeError("quantile level must lie in (0, 1)");
    std::vector<double> sorted(column);
    std::sort(sorted.begin(), sorted.end());
    const std::int64_t m = static_cast<std::int64_t>(sorted.size());
    std::int64_t idx = m - static_cast<std::int64_t>(std::floor(static_cast<double>(m) * x));
    if (idx < 1) idx = 1;
    return sorted[static_cast<std::size_t>(idx - 1)];
}

double quantile_grid(const std::vector<double>& sorted, std::int64_t k) {
    const std::int64_t m = static_cast<std::int64_t>(sorted.size());
    if (m < 1) throw InvalidInputError("quantile of an empty column");
    if (k < 1 || k > m) throw OutOfRangeError("grid index must lie in {1..M}");
    const std::int64_t idx = std::max<std::int64_t>(m - k, 1);
    return sorted[static_cast<std::size_t>(idx - 1)];
}

CalibrationResult multiplicity_correct(const BootstrapMatrix& matrix, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInputError("alpha must lie in (0, 1)");
    const std::int64_t m = matrix.m;
    const std::size_t k_windows = matrix.windows.count();
    if (m < 1 || k_windows == 0) throw InvalidInputError("empty bootstrap matrix");

    std::vector<std::vector<double>> sorted_cols(k_windows);
    for (std::size_t j = 0; j < k_windows; ++j) {
        sorted_cols[j] = matrix.column(j);
        std::sort(sorted_cols[j].begin(), sorted_cols[j].end());
    }

    // Fraction of replicates with any window strictly above its level-k/M
    // quantile; nondecreasing in k, which justifies the binary search.
    std::vector<double> quantiles(k_windows);
    const auto familywise_ok = [&](std::int64_t k) {
        for (std::size_t j = 0; j < k_windows; ++j) quantiles[j] = quantile_grid(sorted_cols[j], k);
        std::int64_t count = 0;
        for (std::int64_t b = 0; b < m; ++b) {
            for (std::size_t j = 0; j < k_windows; ++j) {
                if (matrix.at(b, j) > quantiles[j]) {
                    ++count;
                    break;
                }
            }
        }
        return static_cast<double>(count) / static_cast<double>(m) <= alpha;
    };

    CalibrationResult result;
    result.alpha = alpha;
    std::int64_t k_star;
    if (!familywise_ok(1)) {
        k_star = 1;
        result.conservative_floor = true;
    } else {
        std::int64_t lo = 1;
        std::int64_t hi = m;  // invariant: familywise_ok(lo); search the largest ok k
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo + 1) / 2;
            if (familywise_ok(mid))
                lo = mid;
            else
                hi = mid - 1;
        }
        k_star = lo;
    }

    result.alpha_star = static_cast<double>(k_star) / static_cast<double>(m);
    result.thresholds.resize(k_windows);
    for (std::size_t j = 0; j < k_windows; ++j) result.thresholds[j] = quantile_grid(sorted_cols[j], k_star);
    result.matrix = matrix;
    return result;
}

Calibration calibrate(const MultiSample& sample, const WindowSet& windows, double alpha, std::int64_t m,
                      std::uint64_t seed, std::int64_t calib_lo, std::int64_t calib_hi, std::int64_t horizon,
                      int threads) {
    const std::int64_t n_rows = sample.size();
    if (calib_hi == 0) calib_hi = n_rows;
    if (horizon == 0) horizon = n_rows;
    if (horizon < windows.min_sample_size())
        throw ConfigError("largest window " + std::to_string(windows.max_width()) +
                          " needs a horizon of at least " + std::to_string(windows.min_sample_size()) +
                          ", got " + std::to_string(horizon));

    const Matrix w = stats::vec_outer_rows(sample);
    const stats::ScalingVector scaling = stats::compute_scaling(w, sample.dim(), calib_lo, calib_hi);
    const ResidualSet residuals = compute_residuals(w, calib_lo, calib_hi);
    const BootstrapMatrix matrix = run_replicates(residuals, scaling, windows, horizon, m, seed, threads);
    CalibrationResult corrected = multiplicity_correct(matrix, alpha);

    Calibration out;
    out.alpha = alpha;
    out.alpha_star = corrected.alpha_star;
    out.conservative_floor = corrected.conservative_floor;
    out.windows = windows;
    out.thresholds = std::move(corrected.thresholds);
    out.scaling = scaling;
    out.horizon = horizon;
    out.seed = seed;
    out.replicates = m;
    return out;
}

}  // namespace covbreak::boot
