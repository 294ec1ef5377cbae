#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "covbreak/types.hpp"

// Delimited-text ingestion: rows are time points, columns are coordinates.
// Transforms apply in order: log-returns (per column, shrinking N by one),
// then centering (subtract column means). Parse errors carry 1-based row and
// column locations.

namespace covbreak::io {

struct IngestSpec {
    std::string path;          // empty or "-" = standard input
    char delimiter = ',';
    bool header = false;       // skip the first row
    bool log_returns = false;  // r_t = log p_t - log p_{t-1}; requires positive inputs
    bool center = false;       // subtract column means
};

MultiSample ingest(const IngestSpec& spec);
MultiSample ingest_stream(std::istream& in, const IngestSpec& spec);

// Parses one delimited row into `out` (cleared first). Returns false with a
// human-readable reason in `error` on any malformed cell; used by the
// streaming front-end, which skips bad rows instead of aborting.
bool parse_row(const std::string& line, char delimiter, std::vector<double>& out, std::string& error);

// Largest |column mean| / column-sd ratio of a sample (infinite when some
// column is a nonzero constant, 0 when all columns are centered constants);
// the CLI warns when this exceeds 0.5 and centering is off, since the
// statistics assume zero-mean data.
double max_mean_to_sd_ratio(const MultiSample& sample);

}  // namespace covbreak::io
