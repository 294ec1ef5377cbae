#include "covbreak/stats.hpp"

#include <cmath>
#include <string>

#include "covbreak/detail/sliding.hpp"
#include "covbreak/errors.hpp"
#include "covbreak/kernels.hpp"

namespace covbreak::stats {

namespace {

void check_calib_range(std::int64_t n_rows, std::int64_t lo, std::int64_t hi) {
    if (lo < 1 || hi > n_rows)
        throw OutOfRangeError("calibration range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] outside sample of length " + std::to_string(n_rows));
    if (hi - lo + 1 < 2) throw InsufficientDataError("calibration range must contain at least two rows");
}

void check_dims(const Matrix& w, const ScalingVector& scaling) {
    if (w.cols() != scaling.dim())
        throw DimensionMismatchError("outer-product rows have " + std::to_string(w.cols()) +
                                     " coordinates, scaling has " + std::to_string(scaling.dim()));
}

// Mean of rows [lo, hi] (1-based inclusive), accumulated in ascending order.
std::vector<double> range_mean(const Matrix& w, std::int64_t lo, std::int64_t hi) {
    const auto& ops = kernels::active();
    const int d = static_cast<int>(w.cols());
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t i = lo - 1; i < hi; ++i) ops.add(mean.data(), w.row(i), d);
    const double inv_s = 1.0 / static_cast<double>(hi - lo + 1);
    for (int c = 0; c < d; ++c) mean[static_cast<std::size_t>(c)] *= inv_s;
    return mean;
}

}  // namespace

std::vector<double> vec_outer(const double* x, std::int64_t p) {
    if (p < 1) throw InvalidInputError("vec_outer requires p >= 1");
    for (std::int64_t j = 0; j < p; ++j)
        if (!std::isfinite(x[j])) throw InvalidInputError("vec_outer input has a non-finite entry");
    std::vector<double> out(static_cast<std::size_t>(coord::tri_dim(p)));
    kernels::active().outer_upper(x, static_cast<int>(p), out.data());
    return out;
}

Matrix vec_outer_rows(const MultiSample& sample) {
    const std::int64_t p = sample.dim();
    const auto& ops = kernels::active();
    Matrix w(sample.size(), coord::tri_dim(p));
    for (std::int64_t i = 0; i < sample.size(); ++i) ops.outer_upper(sample.x.row(i), static_cast<int>(p), w.row(i));
    return w;
}

ScalingVector compute_scaling(const Matrix& w, std::int64_t p, std::int64_t calib_lo, std::int64_t calib_hi) {
    if (w.cols() != coord::tri_dim(p))
        throw DimensionMismatchError("outer-product rows do not match dimension p = " + std::to_string(p));
    check_calib_range(w.rows(), calib_lo, calib_hi);
    const auto& ops = kernels::active();
    const int d = static_cast<int>(w.cols());
    const std::int64_t s = calib_hi - calib_lo + 1;

    ScalingVector out;
    out.p = p;
    out.calib_lo = calib_lo;
    out.calib_hi = calib_hi;

    const std::vector<double> mean = range_mean(w, calib_lo, calib_hi);
    std::vector<double> sq(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t i = calib_lo - 1; i < calib_hi; ++i) ops.add_sq_dev(sq.data(), w.row(i), mean.data(), d);

    out.sigma.resize(static_cast<std::size_t>(d));
    const double inv_s = 1.0 / static_cast<double>(s);
    double max_sigma = 0.0;
    for (int c = 0; c < d; ++c) {
        const double sig = std::sqrt(sq[static_cast<std::size_t>(c)] * inv_s);
        out.sigma[static_cast<std::size_t>(c)] = sig;
        if (sig > max_sigma) max_sigma = sig;
    }
    const double floor = kDegeneracyFloor * (max_sigma > 0.0 ? max_sigma : 1.0);
    out.active.resize(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c)
        out.active[static_cast<std::size_t>(c)] = out.sigma[static_cast<std::size_t>(c)] >= floor ? 1 : 0;
    return out;
}

ScalingVector compute_scaling(const MultiSample& sample, std::int64_t calib_lo, std::int64_t calib_hi) {
    return compute_scaling(vec_outer_rows(sample), sample.dim(), calib_lo, calib_hi);
}

std::vector<double> make_weights(const ScalingVector& scaling, std::int64_t n) {
    if (n < 1) throw InvalidInputError("window width must be >= 1");
    const double root = std::sqrt(2.0 * static_cast<double>(n));
    std::vector<double> w(scaling.sigma.size(), 0.0);
    for (std::size_t c = 0; c < w.size(); ++c)
        if (scaling.active[c]) w[c] = 1.0 / (root * scaling.sigma[c]);
    return w;
}

double statistic_at(const MultiSample& sample, const ScalingVector& scaling, std::int64_t n, std::int64_t t) {
    if (sample.dim() != scaling.p)
        throw DimensionMismatchError("sample dimension does not match scaling dimension");
    if (n < 1) throw InvalidInputError("window width must be >= 1");
    const std::int64_t n_rows = sample.size();
    if (t < n + 1 || t > n_rows - n + 1)
        throw OutOfRangeError("center " + std::to_string(t) + " outside admissible range [" +
                              std::to_string(n + 1) + ", " + std::to_string(n_rows - n + 1) + "] for window " +
                              std::to_string(n));
    const std::int64_t p = sample.dim();
    const std::size_t d = scaling.sigma.size();

    // Direct evaluation: window means of the outer-product rows, then the
    // scaled sup-norm of their difference. Kept independent of the rolling
    // path on purpose.
    std::vector<double> mean_left(d, 0.0);
    std::vector<double> mean_right(d, 0.0);
    std::vector<double> buf;
    for (std::int64_t i = t - n; i <= t - 1; ++i) {
        buf = vec_outer(sample.x.row(i - 1), p);
        for (std::size_t c = 0; c < d; ++c) mean_left[c] += buf[c];
    }
    for (std::int64_t i = t; i <= t + n - 1; ++i) {
        buf = vec_outer(sample.x.row(i - 1), p);
        for (std::size_t c = 0; c < d; ++c) mean_right[c] += buf[c];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double factor = std::sqrt(static_cast<double>(n) / 2.0);
    double best = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        if (!scaling.active[c]) continue;
        const double v = factor * std::fabs(mean_left[c] * inv_n - mean_right[c] * inv_n) / scaling.sigma[c];
        if (v > best) best = v;
    }
    return best;
}

StatisticsTrace scan_window(const Matrix& w, const ScalingVector& scaling, std::int64_t n) {
    check_dims(w, scaling);
    if (n < 1) throw InvalidInputError("window width must be >= 1");
    const std::int64_t n_rows = w.rows();
    if (n_rows < 2 * n + 1)
        throw SampleTooShortError("sample of length " + std::to_string(n_rows) + " is too short for window " +
                                  std::to_string(n) + " (needs at least " + std::to_string(2 * n + 1) + ")");
    const std::int64_t centers = WindowSet::num_centers(n_rows, n);
    const std::vector<double> weights = make_weights(scaling, n);
    const auto row = [&w](std::int64_t r) { return w.row(r); };

    StatisticsTrace trace;
    trace.n = n;
    trace.first_center = WindowSet::first_center(n);
    trace.values.resize(static_cast<std::size_t>(centers));

    detail::SlidingStat st(n, w.cols());
    st.reset(0, row);
    trace.values[0] = st.value(weights.data());
    for (std::int64_t i = 1; i < centers; ++i) {
        st.advance(i, row);
        trace.values[static_cast<std::size_t>(i)] = st.value(weights.data());
    }

    trace.max_value = trace.values[0];
    trace.argmax_center = trace.first_center;
    for (std::int64_t i = 1; i < centers; ++i) {
        if (trace.values[static_cast<std::size_t>(i)] > trace.max_value) {
            trace.max_value = trace.values[static_cast<std::size_t>(i)];
            trace.argmax_center = trace.first_center + i;
        }
    }
    return trace;
}

StatisticsTrace scan_window(const MultiSample& sample, const ScalingVector& scaling, std::int64_t n) {
    if (sample.dim() != scaling.p)
        throw DimensionMismatchError("sample dimension does not match scaling dimension");
    return scan_window(vec_outer_rows(sample), scaling, n);
}

std::vector<StatisticsTrace> scan_all(const Matrix& w, const ScalingVector& scaling, const WindowSet& windows) {
    std::vector<StatisticsTrace> traces;
    traces.reserve(windows.count());
    for (const std::int64_t n : windows.widths()) traces.push_back(scan_window(w, scaling, n));
    return traces;
}

std::vector<StatisticsTrace> scan_all(const MultiSample& sample, const ScalingVector& scaling,
                                      const WindowSet& windows) {
    if (sample.dim() != scaling.p)
        throw DimensionMismatchError("sample dimension does not match scaling dimension");
    return scan_all(vec_outer_rows(sample), scaling, windows);
}

}  // namespace covbreak::stats
