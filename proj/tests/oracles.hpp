#pragma once

// Brute-force reference implementations the tests compare the library
// against. Everything here works on full p x p matrices with plain double
// loops: no flat upper-triangle indexing, no rolling sums, no shared kernels.
// Slow on purpose — only correctness matters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "covbreak/rng.hpp"
#include "covbreak/types.hpp"

namespace oracle {

using covbreak::Matrix;
using covbreak::MultiSample;

// ---- full_outer — p x p outer product of one observation ----

inline Matrix full_outer(const double* x, std::int64_t p) {
    Matrix out(p, p);
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) out(j, k) = x[j] * x[k];
    return out;
}

// ---- mean_outer — mean outer product over 1-based rows [lo, hi] ----

inline Matrix mean_outer(const MultiSample& sample, std::int64_t lo, std::int64_t hi) {
    const std::int64_t p = sample.dim();
    Matrix acc(p, p);
    for (std::int64_t i = lo; i <= hi; ++i) {
        const Matrix w = full_outer(sample.x.row(i - 1), p);
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) acc(j, k) += w(j, k);
    }
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) acc(j, k) *= inv;
    return acc;
}

// ---- sigma_matrix — population sd of each outer-product entry on [lo, hi] ----

inline Matrix sigma_matrix(const MultiSample& sample, std::int64_t lo, std::int64_t hi) {
    const std::int64_t p = sample.dim();
    const Matrix mean = mean_outer(sample, lo, hi);
    Matrix acc(p, p);
    for (std::int64_t i = lo; i <= hi; ++i) {
        const Matrix w = full_outer(sample.x.row(i - 1), p);
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) {
                const double dev = w(j, k) - mean(j, k);
                acc(j, k) += dev * dev;
            }
    }
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) acc(j, k) = std::sqrt(acc(j, k) * inv);
    return acc;
}

// ---- active_flags — degeneracy rule on a full sigma matrix ----
// active iff sigma >= 1e-12 * (max sigma over all entries, or 1 if all zero)

inline std::vector<std::uint8_t> active_flags(const Matrix& sigma) {
    const std::int64_t p = sigma.rows();
    double top = 0.0;
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) top = std::max(top, sigma(j, k));
    const double floor = 1e-12 * (top > 0.0 ? top : 1.0);
    std::vector<std::uint8_t> act(static_cast<std::size_t>(p * p), 0);
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) act[static_cast<std::size_t>(j * p + k)] = sigma(j, k) >= floor ? 1 : 0;
    return act;
}

// ---- statistic — literal two-window statistic at 1-based center t ----
// max over all p^2 active entries of sqrt(n/2) |mean_left - mean_right| / sigma

inline double statistic(const MultiSample& sample, const Matrix& sigma, const std::vector<std::uint8_t>& act,
                        std::int64_t n, std::int64_t t) {
    const std::int64_t p = sample.dim();
    const Matrix left = mean_outer(sample, t - n, t - 1);
    const Matrix right = mean_outer(sample, t, t + n - 1);
    const double factor = std::sqrt(static_cast<double>(n) / 2.0);
    double best = 0.0;
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) {
            if (!act[static_cast<std::size_t>(j * p + k)]) continue;
            const double v = factor * std::fabs(left(j, k) - right(j, k)) / sigma(j, k);
            if (v > best) best = v;
        }
    return best;
}

// ---- residual_matrices — centered outer products over [lo, hi] ----

inline std::vector<Matrix> residual_matrices(const MultiSample& sample, std::int64_t lo, std::int64_t hi) {
    const std::int64_t p = sample.dim();
    const Matrix mean = mean_outer(sample, lo, hi);
    std::vector<Matrix> out;
    for (std::int64_t i = lo; i <= hi; ++i) {
        Matrix z = full_outer(sample.x.row(i - 1), p);
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) z(j, k) -= mean(j, k);
        out.push_back(std::move(z));
    }
    return out;
}

// ---- bootstrap_stream — replay of the documented resampling rule ----
// One bounded(2s) draw per output row, in row order: row index u >> 1,
// negated when u & 1.

inline std::vector<Matrix> bootstrap_stream(const std::vector<Matrix>& resid, std::int64_t n_rows,
                                            covbreak::rng::Stream& rng) {
    const auto s = static_cast<std::uint64_t>(resid.size());
    const std::int64_t p = resid.front().rows();
    std::vector<Matrix> out;
    for (std::int64_t r = 0; r < n_rows; ++r) {
        const std::uint64_t u = rng.bounded(2 * s);
        const Matrix& src = resid[static_cast<std::size_t>(u >> 1)];
        Matrix row(p, p);
        const double sign = (u & 1) ? -1.0 : 1.0;
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) row(j, k) = sign * src(j, k);
        out.push_back(std::move(row));
    }
    return out;
}

// ---- stream_statistic — literal bootstrap statistic at center t ----
// max over active entries of |sum_left - sum_right| / (sqrt(2n) sigma)

inline double stream_statistic(const std::vector<Matrix>& stream, const Matrix& sigma,
                               const std::vector<std::uint8_t>& act, std::int64_t n, std::int64_t t) {
    const std::int64_t p = sigma.rows();
    Matrix left(p, p);
    Matrix right(p, p);
    for (std::int64_t i = t - n; i <= t - 1; ++i)
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) left(j, k) += stream[static_cast<std::size_t>(i - 1)](j, k);
    for (std::int64_t i = t; i <= t + n - 1; ++i)
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) right(j, k) += stream[static_cast<std::size_t>(i - 1)](j, k);
    const double root = std::sqrt(2.0 * static_cast<double>(n));
    double best = 0.0;
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) {
            if (!act[static_cast<std::size_t>(j * p + k)]) continue;
            const double v = std::fabs(left(j, k) - right(j, k)) / (root * sigma(j, k));
            if (v > best) best = v;
        }
    return best;
}

inline double stream_max(const std::vector<Matrix>& stream, const Matrix& sigma,
                         const std::vector<std::uint8_t>& act, std::int64_t n) {
    const auto N = static_cast<std::int64_t>(stream.size());
    double best = 0.0;
    for (std::int64_t t = n + 1; t <= N - n + 1; ++t)
        best = std::max(best, stream_statistic(stream, sigma, act, n, t));
    return best;
}

// ---- quantile_by_counting — literal inf-definition at grid level k/M ----
// Smallest column value z with #{b : column[b] > z} <= k, found by exact
// counting (ties included); clamps at the minimum like the plug-in.

inline double quantile_by_counting(std::vector<double> col, std::int64_t k) {
    std::sort(col.begin(), col.end());
    const auto m = static_cast<std::int64_t>(col.size());
    for (std::int64_t i = 0; i < m; ++i) {
        std::int64_t greater = 0;
        for (std::int64_t j = 0; j < m; ++j)
            if (col[j] > col[i]) ++greater;
        if (greater <= k) return col[i];
    }
    return col.back();
}

// ---- familywise_count — replicates where any column exceeds its threshold ----

inline std::int64_t familywise_count(const std::vector<std::vector<double>>& cols,
                                     const std::vector<double>& thresholds) {
    const auto m = static_cast<std::int64_t>(cols.front().size());
    std::int64_t c = 0;
    for (std::int64_t b = 0; b < m; ++b) {
        bool any = false;
        for (std::size_t w = 0; w < cols.size(); ++w)
            if (cols[w][static_cast<std::size_t>(b)] > thresholds[w]) any = true;
        if (any) ++c;
    }
    return c;
}

// ---- alpha_star_scan — exhaustive search of the correction grid ----
// Largest k in {1..M} whose familywise count obeys count/M <= num/den
// (compared in exact integer arithmetic); falls back to k = 1 with the
// conservative flag when no k qualifies.

struct AlphaStarScan {
    std::int64_t k = 0;
    std::vector<double> thresholds;
    bool conservative = false;
};

inline AlphaStarScan alpha_star_scan(const std::vector<std::vector<double>>& cols, std::int64_t num,
                                     std::int64_t den) {
    const auto m = static_cast<std::int64_t>(cols.front().size());
    for (std::int64_t k = m; k >= 1; --k) {
        std::vector<double> thr;
        for (const auto& col : cols) thr.push_back(quantile_by_counting(col, k));
        if (familywise_count(cols, thr) * den <= num * m) return {k, thr, false};
    }
    std::vector<double> thr;
    for (const auto& col : cols) thr.push_back(quantile_by_counting(col, 1));
    return {1, thr, true};
}

// ---- rel_diff — symmetric relative difference with an absolute floor ----

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) / scale;
}

}  // namespace oracle
