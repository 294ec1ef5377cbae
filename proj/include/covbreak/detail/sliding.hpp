#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "covbreak/kernels.hpp"
#include "covbreak/stats.hpp"

// Shared rolling-sum state for one window width. The offline scan and the
// online detector both drive this exact code with the same operation order,
// which is what makes their statistic values bit-identical. RowFn maps an
// absolute 0-based row index to a pointer to that row's d coordinates; the
// caller guarantees availability of every index this class touches (for
// center offset i: rows i .. 2n+i-1).

namespace covbreak::detail {

class SlidingStat {
public:
    SlidingStat(std::int64_t n, std::int64_t d)
        : n_(n), d_(static_cast<int>(d)), left_(static_cast<std::size_t>(d), 0.0), right_(static_cast<std::size_t>(d), 0.0) {}

    // Fresh ascending accumulation of both window sums for center offset i
    // (left rows i..n+i-1, right rows n+i..2n+i-1).
    template <typename RowFn>
    void reset(std::int64_t i, RowFn&& row) {
        const auto& ops = kernels::active();
        std::fill(left_.begin(), left_.end(), 0.0);
        std::fill(right_.begin(), right_.end(), 0.0);
        for (std::int64_t r = i; r < n_ + i; ++r) ops.add(left_.data(), row(r), d_);
        for (std::int64_t r = n_ + i; r < 2 * n_ + i; ++r) ops.add(right_.data(), row(r), d_);
        slides_since_refresh_ = 0;
    }

    // Advance from center offset i-1 to i (i >= 1). Operation order is fixed;
    // do not reorder. Periodically falls back to a full reset to bound drift.
    template <typename RowFn>
    void advance(std::int64_t i, RowFn&& row) {
        const auto& ops = kernels::active();
        ops.add(left_.data(), row(n_ + i - 1), d_);
        ops.sub(left_.data(), row(i - 1), d_);
        ops.add(right_.data(), row(2 * n_ + i - 1), d_);
        ops.sub(right_.data(), row(n_ + i - 1), d_);
        if (++slides_since_refresh_ >= stats::kRefreshInterval) reset(i, row);
    }

    // Statistic for the current center given precomputed per-coordinate
    // weights (see stats::make_weights).
    double value(const double* weights) const {
        return kernels::active().max_weighted_absdiff(left_.data(), right_.data(), weights, d_);
    }

private:
    std::int64_t n_;
    int d_;
    std::vector<double> left_;
    std::vector<double> right_;
    std::int64_t slides_since_refresh_ = 0;
};

}  // namespace covbreak::detail
