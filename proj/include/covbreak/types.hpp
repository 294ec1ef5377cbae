#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "covbreak/errors.hpp"

// Core value types: a row-major matrix of doubles, the observed sample, the
// validated set of window half-widths, and the flat indexing scheme for the
// deduplicated upper triangle of a symmetric p x p matrix.

namespace covbreak {

// Dense row-major matrix. Rows are observations (or vectorised outer
// products); columns are coordinates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::int64_t rows, std::int64_t cols)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), 0.0) {
        if (rows < 0 || cols < 0) throw InvalidInputError("matrix dimensions must be non-negative");
    }

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }

    double* row(std::int64_t i) { return data_.data() + i * cols_; }
    const double* row(std::int64_t i) const { return data_.data() + i * cols_; }

    double& operator()(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    double operator()(std::int64_t i, std::int64_t j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<double> data_;
};

// Observed sample: N rows of dimension p. Construction validates finiteness
// so downstream code never has to re-check.
struct MultiSample {
    Matrix x;  // N x p

    MultiSample() = default;
    explicit MultiSample(Matrix m) : x(std::move(m)) {
        if (x.rows() < 1 || x.cols() < 1)
            throw InvalidInputError("sample must have at least one row and one column");
        const double* d = x.data();
        const std::int64_t total = x.rows() * x.cols();
        for (std::int64_t i = 0; i < total; ++i)
            if (!std::isfinite(d[i]))
                throw InvalidInputError("sample contains a non-finite value at flat offset " + std::to_string(i));
    }

    std::int64_t size() const { return x.rows(); }
    std::int64_t dim() const { return x.cols(); }
};

// Set of window half-widths. Stored sorted ascending, deduplicated.
class WindowSet {
public:
    WindowSet() = default;
    explicit WindowSet(std::vector<std::int64_t> widths) : widths_(std::move(widths)) {
        if (widths_.empty()) throw InvalidInputError("window set must not be empty");
        std::sort(widths_.begin(), widths_.end());
        widths_.erase(std::unique(widths_.begin(), widths_.end()), widths_.end());
        if (widths_.front() < 2) throw InvalidInputError("window widths must be >= 2");
    }

    const std::vector<std::int64_t>& widths() const { return widths_; }
    std::int64_t min_width() const { return widths_.front(); }
    std::int64_t max_width() const { return widths_.back(); }
    std::size_t count() const { return widths_.size(); }

    // Number of admissible centers for width n against a sample of length N:
    // centers run over t in {n+1, ..., N-n+1} (1-based), so N-2n+1 of them.
    static std::int64_t num_centers(std::int64_t N, std::int64_t n) { return N - 2 * n + 1; }
    static std::int64_t first_center(std::int64_t n) { return n + 1; }

    // Smallest N for which every width in the set has at least one center.
    std::int64_t min_sample_size() const { return 2 * max_width() + 1; }

    friend bool operator==(const WindowSet& a, const WindowSet& b) { return a.widths_ == b.widths_; }

private:
    std::vector<std::int64_t> widths_;
};

// Flat indexing for the upper triangle (j <= k) of a symmetric p x p matrix,
// row-major: (0,0),(0,1),...,(0,p-1),(1,1),... The off-diagonal entries of an
// outer product x x^T appear twice with equal value, so the sup-norm over all
// p^2 entries equals the sup-norm over these p(p+1)/2.
namespace coord {

inline std::int64_t tri_dim(std::int64_t p) { return p * (p + 1) / 2; }

inline std::int64_t flat_index(std::int64_t j, std::int64_t k, std::int64_t p) {
    // requires 0 <= j <= k < p
    return j * p - j * (j - 1) / 2 + (k - j);
}

inline std::pair<std::int64_t, std::int64_t> unflatten(std::int64_t c, std::int64_t p) {
    std::int64_t j = 0;
    std::int64_t row_start = 0;
    while (row_start + (p - j) <= c) {
        row_start += p - j;
        ++j;
    }
    return {j, j + (c - row_start)};
}

}  // namespace coord

}  // namespace covbreak
