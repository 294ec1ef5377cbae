#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "covbreak/simulation.hpp"
#include "covbreak/types.hpp"
#include "oracles.hpp"

using namespace covbreak;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::int64_t i = 0; i < m.rows(); ++i)
        for (std::int64_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

double max_abs_entry(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
    return worst;
}

Matrix empirical_covariance(const MultiSample& sample, std::int64_t lo, std::int64_t hi) {
    const std::int64_t p = sample.dim();
    Matrix cov(p, p);
    for (std::int64_t i = lo; i <= hi; ++i)
        for (std::int64_t j = 0; j < p; ++j)
            for (std::int64_t k = 0; k < p; ++k) cov(j, k) += sample.x(i - 1, j) * sample.x(i - 1, k);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::int64_t j = 0; j < p; ++j)
        for (std::int64_t k = 0; k < p; ++k) cov(j, k) *= inv;
    return cov;
}

sim::ExperimentConfig small_config() {
    sim::ExperimentConfig config;
    config.label = "unit";
    config.p = 4;
    config.n_obs = 80;
    config.tau = 0;
    config.sigma1.kind = sim::CovarianceSpec::Kind::factor_model;
    config.sigma2.kind = sim::CovarianceSpec::Kind::scaled_block;
    config.windows = WindowSet({5, 10});
    config.alpha = 0.05;
    config.replicates = 120;
    config.runs = 60;
    config.seed = 31;
    return config;
}

}  // namespace

// ---- realize_covariance — covariance recipes ----

TEST_CASE("identity and diagonal specs realize exactly") {
    rng::Stream rng(1);
    sim::CovarianceSpec spec;
    spec.kind = sim::CovarianceSpec::Kind::identity;
    spec.p = 3;
    const auto id = sim::realize_covariance(spec, rng);
    for (std::int64_t i = 0; i < 3; ++i)
        for (std::int64_t j = 0; j < 3; ++j) {
            CHECK(id.sigma(i, j) == (i == j ? 1.0 : 0.0));
            CHECK(id.factor(i, j) == (i == j ? 1.0 : 0.0));
        }

    sim::CovarianceSpec diag;
    diag.kind = sim::CovarianceSpec::Kind::diagonal;
    diag.p = 2;
    diag.diag_values = {4.0, 9.0};
    const auto d = sim::realize_covariance(diag, rng);
    CHECK(d.sigma(0, 0) == 4.0);
    CHECK(d.sigma(1, 1) == 9.0);
    CHECK(d.factor(0, 0) == 2.0);
    CHECK(d.factor(1, 1) == 3.0);
    CHECK(d.factor(0, 1) == 0.0);

    diag.diag_values = {4.0, -1.0};
    CHECK_THROWS_AS(sim::realize_covariance(diag, rng), InvalidInputError);
}

TEST_CASE("factor models are symmetric with noise-bounded spectra") {
    rng::Stream rng(7);
    sim::CovarianceSpec spec;
    spec.kind = sim::CovarianceSpec::Kind::factor_model;
    spec.p = 10;
    spec.factors = 2;
    spec.noise = 0.1;
    const auto real = sim::realize_covariance(spec, rng);
    for (std::int64_t i = 0; i < 10; ++i)
        for (std::int64_t j = 0; j < 10; ++j) CHECK(real.sigma(i, j) == real.sigma(j, i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(real.sigma));
    CHECK(solver.eigenvalues().minCoeff() >= 0.1 - 1e-9);

    // factor * factor^T reproduces sigma.
    Matrix product(10, 10);
    for (std::int64_t i = 0; i < 10; ++i)
        for (std::int64_t j = 0; j < 10; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < 10; ++k) acc += real.factor(i, k) * real.factor(j, k);
            product(i, j) = acc;
        }
    CHECK(max_abs_entry(product, real.sigma) <= 1e-10);
}

TEST_CASE("explicit matrices are validated") {
    rng::Stream rng(9);
    sim::CovarianceSpec spec;
    spec.kind = sim::CovarianceSpec::Kind::explicit_matrix;
    spec.p = 2;
    spec.matrix = Matrix(2, 2);
    spec.matrix(0, 0) = 2.0;
    spec.matrix(0, 1) = 0.5;
    spec.matrix(1, 0) = 0.5;
    spec.matrix(1, 1) = 1.0;
    const auto real = sim::realize_covariance(spec, rng);
    Matrix product(2, 2);
    for (std::int64_t i = 0; i < 2; ++i)
        for (std::int64_t j = 0; j < 2; ++j)
            for (std::int64_t k = 0; k < 2; ++k) product(i, j) += real.factor(i, k) * real.factor(j, k);
    CHECK(max_abs_entry(product, spec.matrix) <= 1e-10);

    spec.matrix(0, 0) = -2.0;  // not positive semi-definite
    CHECK_THROWS_AS(sim::realize_covariance(spec, rng), InvalidInputError);
    spec.matrix(0, 0) = 2.0;
    spec.matrix(1, 0) = 0.1;  // not symmetric
    CHECK_THROWS_AS(sim::realize_covariance(spec, rng), InvalidInputError);
}

TEST_CASE("scaled blocks multiply a contiguous block of the base variance") {
    rng::Stream rng(11);
    Matrix base(4, 4);
    for (std::int64_t i = 0; i < 4; ++i) base(i, i) = 1.0;
    sim::CovarianceSpec spec;
    spec.kind = sim::CovarianceSpec::Kind::scaled_block;
    spec.p = 4;
    spec.block_factor = 3.0;
    spec.block_size = 2;
    const auto real = sim::realize_covariance(spec, rng, &base);
    int tripled = 0;
    int unit = 0;
    std::int64_t first = -1;
    for (std::int64_t i = 0; i < 4; ++i) {
        if (std::fabs(real.sigma(i, i) - 3.0) < 1e-12) {
            if (first < 0) first = i;
            ++tripled;
        }
        if (std::fabs(real.sigma(i, i) - 1.0) < 1e-12) ++unit;
    }
    CHECK(tripled == 2);
    CHECK(unit == 2);
    CHECK(std::fabs(real.sigma(first, first) - real.sigma(first + 1, first + 1)) < 1e-12);  // contiguous
    CHECK_THROWS_AS(sim::realize_covariance(spec, rng, nullptr), InvalidInputError);

    spec.block_size = 0;  // defaults to max(1, p/4)
    sim::CovarianceSpec wide = spec;
    wide.p = 8;
    Matrix base8(8, 8);
    for (std::int64_t i = 0; i < 8; ++i) base8(i, i) = 1.0;
    const auto real8 = sim::realize_covariance(wide, rng, &base8);
    int scaled8 = 0;
    for (std::int64_t i = 0; i < 8; ++i)
        if (std::fabs(real8.sigma(i, i) - 3.0) < 1e-12) ++scaled8;
    CHECK(scaled8 == 2);
}

// ---- gen_sample / gen_break_sample — Gaussian generation ----

TEST_CASE("samples from the zero factor are zero; fixed seeds reproduce bits") {
    Matrix zero(3, 3);
    rng::Stream rng(13);
    const auto sample = sim::gen_sample(zero, 10, rng);
    for (std::int64_t i = 0; i < 10; ++i)
        for (std::int64_t j = 0; j < 3; ++j) CHECK(sample.x(i, j) == 0.0);

    Matrix id(2, 2);
    id(0, 0) = id(1, 1) = 1.0;
    rng::Stream a(77);
    rng::Stream b(77);
    const auto sa = sim::gen_sample(id, 50, a);
    const auto sb = sim::gen_sample(id, 50, b);
    for (std::int64_t i = 0; i < 50; ++i)
        for (std::int64_t j = 0; j < 2; ++j) CHECK(sa.x(i, j) == sb.x(i, j));
}

TEST_CASE("identity-factor samples have near-identity empirical covariance") {
    const std::int64_t p = 4;
    const std::int64_t N = 4000;
    Matrix id(p, p);
    for (std::int64_t i = 0; i < p; ++i) id(i, i) = 1.0;
    rng::Stream rng(15);
    const auto sample = sim::gen_sample(id, N, rng);
    const Matrix cov = empirical_covariance(sample, 1, N);
    Matrix eye(p, p);
    for (std::int64_t i = 0; i < p; ++i) eye(i, i) = 1.0;
    CHECK(max_abs_entry(cov, eye) < 5.0 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(N)));
}

TEST_CASE("break samples share draws with unbroken samples and validate tau") {
    Matrix id(2, 2);
    id(0, 0) = id(1, 1) = 1.0;
    rng::Stream a(21);
    rng::Stream b(21);
    const auto plain = sim::gen_sample(id, 30, a);
    const auto broken = sim::gen_break_sample(id, id, 15, 30, b);
    for (std::int64_t i = 0; i < 30; ++i)
        for (std::int64_t j = 0; j < 2; ++j) CHECK(plain.x(i, j) == broken.x(i, j));

    rng::Stream c(22);
    CHECK_THROWS_AS(sim::gen_break_sample(id, id, 0, 30, c), OutOfRangeError);
    CHECK_THROWS_AS(sim::gen_break_sample(id, id, 30, 30, c), OutOfRangeError);
}

TEST_CASE("break samples switch covariance at tau") {
    const std::int64_t p = 3;
    const std::int64_t N = 4000;
    const std::int64_t tau = 2000;
    Matrix f1(p, p);
    Matrix f2(p, p);
    for (std::int64_t i = 0; i < p; ++i) {
        f1(i, i) = 1.0;
        f2(i, i) = 2.0;  // covariance 4I after the break
    }
    rng::Stream rng(23);
    const auto sample = sim::gen_break_sample(f1, f2, tau, N, rng);
    const Matrix pre = empirical_covariance(sample, 1, tau);
    const Matrix post = empirical_covariance(sample, tau + 1, N);
    Matrix eye(p, p);
    Matrix four(p, p);
    for (std::int64_t i = 0; i < p; ++i) {
        eye(i, i) = 1.0;
        four(i, i) = 4.0;
    }
    const double tol = 5.0 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(tau));
    CHECK(max_abs_entry(pre, eye) < tol);
    CHECK(max_abs_entry(post, four) < 4.0 * tol);
}

// ---- break_extent ----

TEST_CASE("break extent is the entrywise sup-norm of the difference") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 2.0;
    Matrix b = a;
    CHECK(sim::break_extent(a, b) == 0.0);
    b(0, 0) = 1.5;
    b(1, 1) = 2.5;
    CHECK(sim::break_extent(a, b) == 0.5);

    rng::Stream s(29);
    Matrix c(3, 3);
    Matrix d(3, 3);
    for (std::int64_t i = 0; i < 3; ++i)
        for (std::int64_t j = 0; j < 3; ++j) {
            c(i, j) = s.gaussian();
            d(i, j) = s.gaussian();
        }
    double want = 0.0;
    for (std::int64_t i = 0; i < 3; ++i)
        for (std::int64_t j = 0; j < 3; ++j) want = std::max(want, std::fabs(c(i, j) - d(i, j)));
    CHECK(sim::break_extent(c, d) == want);

    Matrix e(2, 3);
    CHECK_THROWS_AS(sim::break_extent(c, e), DimensionMismatchError);
}

// ---- config validation ----

TEST_CASE("experiment configs are validated for internal consistency") {
    auto config = small_config();
    CHECK_NOTHROW(sim::validate_config(config));
    CHECK(sim::resolved_calib_hi(config) == 80);

    auto bad = config;
    bad.tau = 5;  // too close to the edge for n_plus = 10
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
    bad = config;
    bad.tau = 75;
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
    bad = config;
    bad.n_obs = 20;  // below 2 * 10 + 1
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
    bad = config;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
    bad = config;
    bad.replicates = 50;
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
    bad = config;
    bad.runs = 0;
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
    bad = config;
    bad.calib_lo = 80;  // single-row calibration range
    CHECK_THROWS_AS(sim::validate_config(bad), ConfigError);
}

// ---- run_experiment — the Monte Carlo harness ----

TEST_CASE("experiments are pure functions of their config") {
    auto config = small_config();
    config.runs = 5;
    const auto a = sim::run_experiment(config, 1);
    const auto b = sim::run_experiment(config, 1);
    const auto c = sim::run_experiment(config, 3);
    CHECK(a.rate == b.rate);
    CHECK(a.rate == c.rate);
    CHECK(a.detected_count == c.detected_count);
    REQUIRE(a.per_run.size() == 5);
    REQUIRE(c.per_run.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.per_run[i].detected == c.per_run[i].detected);
        CHECK(a.per_run[i].n_hat == c.per_run[i].n_hat);
        CHECK(a.per_run[i].tau_hat == c.per_run[i].tau_hat);
        CHECK(a.per_run[i].lo == c.per_run[i].lo);
        CHECK(a.per_run[i].hi == c.per_run[i].hi);
    }
    CHECK(a.delta == c.delta);
    CHECK(a.null_model);
    CHECK(a.delta == 0.0);  // no break configured
}

TEST_CASE("the null model keeps the rejection rate inside the binomial band") {
    auto config = small_config();
    const auto result = sim::run_experiment(config, 1);
    CHECK(result.null_model);
    CHECK(result.rate >= 0.0);
    CHECK(result.rate <= 0.05 + 2.58 * std::sqrt(0.05 * 0.95 / static_cast<double>(config.runs)));
    CHECK(std::isnan(result.mean_n_hat) == (result.detected_count == 0));
    CHECK(std::isnan(result.interval_coverage));  // coverage is undefined under the null
}

TEST_CASE("a strong break is detected with high power and localized tightly") {
    auto config = small_config();
    config.label = "strong";
    config.tau = 40;
    config.runs = 40;
    config.calib_lo = 1;
    config.calib_hi = 30;
    config.sigma2.kind = sim::CovarianceSpec::Kind::scaled_block;
    config.sigma2.block_factor = 9.0;
    config.sigma2.block_size = config.p;  // whole-matrix scale-up
    const auto result = sim::run_experiment(config, 1);
    CHECK_FALSE(result.null_model);
    CHECK(result.delta > 0.0);
    CHECK(result.rate >= 0.9);
    CHECK(result.detected_count >= 36);
    CHECK(result.mean_n_hat <= 10.0);  // never exceeds the widest window
    CHECK(result.interval_coverage > 0.5);
    CHECK(result.wall_seconds > 0.0);
    for (const auto& run : result.per_run)
        if (run.detected) {
            CHECK(run.lo == run.tau_hat - run.n_hat);
            CHECK(run.hi == run.tau_hat + run.n_hat - 1);
        }
}

// ---- delay_sweep — sensitivity in the break extent ----

TEST_CASE("sweeps scale the break extent linearly and report monotone rates") {
    auto config = small_config();
    config.tau = 40;
    config.runs = 40;
    config.calib_lo = 1;
    config.calib_hi = 30;
    config.sigma2.kind = sim::CovarianceSpec::Kind::scaled_block;
    config.sigma2.block_factor = 9.0;
    config.sigma2.block_size = config.p;
    const auto rows = sim::delay_sweep(config, {0.0, 0.5, 1.0}, 1);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].multiplier == 0.0);
    CHECK(rows[0].delta == 0.0);
    CHECK(oracle::rel_diff(rows[1].delta, 0.5 * rows[2].delta) <= 1e-9);
    // Strongly separated extents: the rate must actually climb. (The absolute
    // level at m = 0 is left to the dedicated null-model test: a 30-row
    // calibration range is deliberately small here and inflates it.)
    CHECK(rows[2].detection_rate >= rows[0].detection_rate);
    CHECK(rows[2].detection_rate - rows[0].detection_rate >= 0.5);
    CHECK(rows[2].detection_rate >= 0.9);
    for (const auto& row : rows) {
        CHECK(row.detection_rate >= 0.0);
        CHECK(row.detection_rate <= 1.0);
        if (row.detected_count == 0) CHECK(std::isnan(row.mean_delay));
    }
}

TEST_CASE("sweep multipliers must be sorted inside the unit interval") {
    auto config = small_config();
    config.tau = 40;
    CHECK_THROWS_AS(sim::delay_sweep(config, {-0.1, 0.5}, 1), InvalidInputError);
    CHECK_THROWS_AS(sim::delay_sweep(config, {0.5, 0.4}, 1), InvalidInputError);
    CHECK_THROWS_AS(sim::delay_sweep(config, {0.5, 1.5}, 1), InvalidInputError);
    auto null_base = small_config();  // tau = 0
    CHECK_THROWS_AS(sim::delay_sweep(null_base, {0.0, 1.0}, 1), ConfigError);
}
