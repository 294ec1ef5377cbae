#include "covbreak/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <string_view>

#include "covbreak/errors.hpp"

namespace covbreak::io {

namespace {

std::string_view trim(std::string_view sv) {
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t')) sv.remove_suffix(1);
    return sv;
}

bool parse_cell(std::string_view cell, double& value, std::string& error) {
    cell = trim(cell);
    if (cell.empty()) {
        error = "empty cell";
        return false;
    }
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        error = "not a number: '" + std::string(cell) + "'";
        return false;
    }
    if (!std::isfinite(value)) {
        error = "non-finite value: '" + std::string(cell) + "'";
        return false;
    }
    return true;
}

}  // namespace

bool parse_row(const std::string& line, char delimiter, std::vector<double>& out, std::string& error) {
    out.clear();
    std::string_view rest(line);
    if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
    std::size_t column = 0;
    for (;;) {
        ++column;
        const std::size_t pos = rest.find(delimiter);
        const std::string_view cell = pos == std::string_view::npos ? rest : rest.substr(0, pos);
        double value = 0.0;
        std::string cell_error;
        if (!parse_cell(cell, value, cell_error)) {
            error = "column " + std::to_string(column) + ": " + cell_error;
            return false;
        }
        out.push_back(value);
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
    }
    return true;
}

MultiSample ingest_stream(std::istream& in, const IngestSpec& spec) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::string error;
    std::int64_t data_row = 0;
    bool skipped_header = false;
    std::vector<double> parsed;
    while (std::getline(in, line)) {
        std::string_view sv(line);
        if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
        if (trim(sv).empty()) continue;  // blank lines (e.g. trailing newline) are skipped
        if (spec.header && !skipped_header) {
            skipped_header = true;
            continue;
        }
        ++data_row;
        if (!parse_row(line, spec.delimiter, parsed, error))
            throw DataError("row " + std::to_string(data_row) + ", " + error);
        if (!rows.empty() && parsed.size() != rows.front().size())
            throw DataError("row " + std::to_string(data_row) + ": expected " +
                            std::to_string(rows.front().size()) + " cells, got " + std::to_string(parsed.size()));
        rows.push_back(parsed);
    }
    if (rows.empty()) throw DataError("input contains no data rows");

    const std::int64_t p = static_cast<std::int64_t>(rows.front().size());
    std::int64_t n = static_cast<std::int64_t>(rows.size());

    if (spec.log_returns) {
        if (n < 2) throw DataError("log-returns need at least two rows");
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < p; ++j)
                if (rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] <= 0.0)
                    throw DataError("row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                                    ": non-positive value under log-returns");
        Matrix x(n - 1, p);
        for (std::int64_t i = 1; i < n; ++i)
            for (std::int64_t j = 0; j < p; ++j)
                x(i - 1, j) = std::log(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) -
                              std::log(rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)]);
        n -= 1;
        if (spec.center) {
            for (std::int64_t j = 0; j < p; ++j) {
                double mean = 0.0;
                for (std::int64_t i = 0; i < n; ++i) mean += x(i, j);
                mean /= static_cast<double>(n);
                for (std::int64_t i = 0; i < n; ++i) x(i, j) -= mean;
            }
        }
        return MultiSample(std::move(x));
    }

    Matrix x(n, p);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < p; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (spec.center) {
        for (std::int64_t j = 0; j < p; ++j) {
            double mean = 0.0;
            for (std::int64_t i = 0; i < n; ++i) mean += x(i, j);
            mean /= static_cast<double>(n);
            for (std::int64_t i = 0; i < n; ++i) x(i, j) -= mean;
        }
    }
    return MultiSample(std::move(x));
}

MultiSample ingest(const IngestSpec& spec) {
    if (spec.path.empty() || spec.path == "-") return ingest_stream(std::cin, spec);
    std::ifstream file(spec.path);
    if (!file) throw DataError("cannot open input file: " + spec.path);
    return ingest_stream(file, spec);
}

double max_mean_to_sd_ratio(const MultiSample& sample) {
    const std::int64_t n = sample.size();
    const std::int64_t p = sample.dim();
    double worst = 0.0;
    for (std::int64_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < n; ++i) mean += sample.x(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double dev = sample.x(i, j) - mean;
            var += dev * dev;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        double ratio;
        if (sd > 0.0)
            ratio = std::fabs(mean) / sd;
        else
            ratio = mean != 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        if (ratio > worst) worst = ratio;
    }
    return worst;
}

}  // namespace covbreak::io
