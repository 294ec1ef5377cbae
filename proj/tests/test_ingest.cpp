#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "covbreak/ingest.hpp"
#include "covbreak/types.hpp"

using namespace covbreak;

namespace {

MultiSample parse(const std::string& text, io::IngestSpec spec = {}) {
    std::istringstream in(text);
    return io::ingest_stream(in, spec);
}

std::string message_of(const std::string& text, io::IngestSpec spec = {}) {
    try {
        parse(text, spec);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

// ---- ingest_stream — plain parsing ----

TEST_CASE("delimited text becomes a row-major sample") {
    const auto sample = parse("1,2\n3,4\n5,6\n");
    REQUIRE(sample.size() == 3);
    REQUIRE(sample.dim() == 2);
    CHECK(sample.x(0, 0) == 1.0);
    CHECK(sample.x(0, 1) == 2.0);
    CHECK(sample.x(2, 1) == 6.0);
}

TEST_CASE("alternative delimiters, CRLF endings, blank lines, and headers") {
    io::IngestSpec semi;
    semi.delimiter = ';';
    const auto s = parse("1.5;2\r\n\r\n-3;4e-1\r\n", semi);
    REQUIRE(s.size() == 2);
    CHECK(s.x(0, 0) == 1.5);
    CHECK(s.x(1, 0) == -3.0);
    CHECK(s.x(1, 1) == 0.4);

    io::IngestSpec with_header;
    with_header.header = true;
    const auto h = parse("a,b\n1,2\n", with_header);
    REQUIRE(h.size() == 1);
    CHECK(h.x(0, 1) == 2.0);

    // Without the flag the header is a parse error at row 1.
    const std::string msg = message_of("a,b\n1,2\n");
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);
}

TEST_CASE("malformed inputs carry row and column locations") {
    CHECK(message_of("1,2\n3,oops\n").find("row 2, column 2") != std::string::npos);
    CHECK(message_of("1,2\n3\n").find("row 2") != std::string::npos);   // ragged
    CHECK(message_of("1,2\n3,\n").find("empty cell") != std::string::npos);
    CHECK(message_of("1,inf\n").find("non-finite") != std::string::npos);
    CHECK(message_of("").find("no data rows") != std::string::npos);
    CHECK(message_of("\n\n").find("no data rows") != std::string::npos);
}

// ---- transforms ----

TEST_CASE("log returns of constant price paths are exactly zero") {
    io::IngestSpec spec;
    spec.log_returns = true;
    const auto s = parse("5,7\n5,7\n5,7\n", spec);
    REQUIRE(s.size() == 2);
    REQUIRE(s.dim() == 2);
    for (std::int64_t i = 0; i < 2; ++i)
        for (std::int64_t j = 0; j < 2; ++j) CHECK(s.x(i, j) == 0.0);
}

TEST_CASE("log returns of an exponential price path are unit") {
    io::IngestSpec spec;
    spec.log_returns = true;
    std::ostringstream text;
    text.precision(17);
    text << 1.0 << "\n" << std::exp(1.0) << "\n" << std::exp(2.0) << "\n";
    const auto s = parse(text.str(), spec);
    REQUIRE(s.size() == 2);
    CHECK(s.x(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.x(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log returns reject non-positive prices and single rows") {
    io::IngestSpec spec;
    spec.log_returns = true;
    CHECK(message_of("1,2\n3,0\n", spec).find("row 2, column 2") != std::string::npos);
    CHECK(message_of("1\n-2\n", spec).find("non-positive") != std::string::npos);
    CHECK(message_of("1,2\n", spec).find("two rows") != std::string::npos);
}

TEST_CASE("centering removes column means") {
    io::IngestSpec spec;
    spec.center = true;
    const auto s = parse("1,10\n2,20\n3,30\n", spec);
    for (std::int64_t j = 0; j < 2; ++j) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < 3; ++i) mean += s.x(i, j);
        CHECK(std::fabs(mean / 3.0) <= 1e-12);
    }
    CHECK(s.x(0, 0) == -1.0);
    CHECK(s.x(2, 1) == 10.0);
}

TEST_CASE("log returns apply before centering") {
    io::IngestSpec spec;
    spec.log_returns = true;
    spec.center = true;
    const auto s = parse("1\n2\n8\n", spec);  // returns log 2 and log 4, centered to -+ log(2)/2
    REQUIRE(s.size() == 2);
    CHECK(s.x(0, 0) == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(s.x(1, 0) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
}

// ---- parse_row — the streaming front-end's row parser ----

TEST_CASE("single rows parse with precise failure reasons") {
    std::vector<double> out;
    std::string error;
    CHECK(io::parse_row("1, 2.5 ,3e2", ',', out, error));
    REQUIRE(out.size() == 3);
    CHECK(out[1] == 2.5);
    CHECK(out[2] == 300.0);

    CHECK(io::parse_row("4;5", ';', out, error));
    CHECK(out.size() == 2);

    CHECK_FALSE(io::parse_row("1,x,3", ',', out, error));
    CHECK(error.find("column 2") != std::string::npos);
    CHECK_FALSE(io::parse_row("1,,3", ',', out, error));
    CHECK(error.find("empty cell") != std::string::npos);
    CHECK_FALSE(io::parse_row("nan", ',', out, error));
    CHECK(error.find("non-finite") != std::string::npos);

    CHECK(io::parse_row("7\r", ',', out, error));  // trailing CR stripped
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 7.0);
}

// ---- max_mean_to_sd_ratio — the centering heuristic ----

TEST_CASE("mean-to-sd ratios flag uncentered data") {
    const auto centered = parse("-1,5\n1,-5\n");
    CHECK(io::max_mean_to_sd_ratio(centered) == 0.0);

    const auto shifted = parse("9,0\n11,0\n");  // mean 10, sd 1 in column 1
    CHECK(io::max_mean_to_sd_ratio(shifted) == doctest::Approx(10.0).epsilon(1e-12));

    const auto constant = parse("3\n3\n3\n");  // nonzero constant: infinite ratio
    CHECK(std::isinf(io::max_mean_to_sd_ratio(constant)));

    const auto zeros = parse("0,0\n0,0\n");
    CHECK(io::max_mean_to_sd_ratio(zeros) == 0.0);
}
