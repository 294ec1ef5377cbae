#include "covbreak/simulation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "covbreak/bootstrap.hpp"
#include "covbreak/detector.hpp"
#include "covbreak/errors.hpp"
#include "covbreak/parallel.hpp"

namespace covbreak::sim {

namespace {

constexpr std::uint64_t kTagCovariance = 0;
constexpr std::uint64_t kTagRun = 1;
constexpr std::uint64_t kTagBootstrap = 2;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Matrix from_eigen(const Eigen::MatrixXd& m) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::int64_t i = 0; i < m.rows(); ++i)
        for (std::int64_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

// Symmetric PSD root via eigendecomposition; tiny negative eigenvalues (from
// roundoff) are clamped to zero, genuinely negative ones are an error.
Matrix psd_root(const Eigen::MatrixXd& sigma, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
    if (solver.info() != Eigen::Success) throw InvalidInputError(std::string(what) + ": eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues();
    const double scale = std::max(std::abs(evals(0)), std::abs(evals(evals.size() - 1)));
    const double tol = 1e-10 * std::max(scale, 1.0);
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals(i) < -tol)
            throw InvalidInputError(std::string(what) + ": matrix is not positive semi-definite (eigenvalue " +
                                    std::to_string(evals(i)) + ")");
        if (evals(i) < 0.0) evals(i) = 0.0;
    }
    const Eigen::MatrixXd root =
        solver.eigenvectors() * evals.cwiseSqrt().asDiagonal() * solver.eigenvectors().transpose();
    return from_eigen(root);
}

void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-9 * scale)
                throw InvalidInputError(std::string(what) + ": matrix is not symmetric");
}

}  // namespace

RealizedCovariance realize_covariance(const CovarianceSpec& spec, rng::Stream& rng, const Matrix* base) {
    const std::int64_t p = spec.kind == CovarianceSpec::Kind::scaled_block && base != nullptr ? base->rows()
                           : spec.kind == CovarianceSpec::Kind::explicit_matrix ? spec.matrix.rows()
                           : spec.kind == CovarianceSpec::Kind::diagonal
                               ? static_cast<std::int64_t>(spec.diag_values.size())
                               : spec.p;
    if (p < 1) throw InvalidInputError("covariance spec has no usable dimension");

    switch (spec.kind) {
        case CovarianceSpec::Kind::identity: {
            Matrix eye(p, p);
            for (std::int64_t i = 0; i < p; ++i) eye(i, i) = 1.0;
            return {eye, eye};
        }
        case CovarianceSpec::Kind::diagonal: {
            Matrix sigma(p, p);
            Matrix factor(p, p);
            for (std::int64_t i = 0; i < p; ++i) {
                const double v = spec.diag_values[static_cast<std::size_t>(i)];
                if (v < 0.0) throw InvalidInputError("diagonal covariance entries must be >= 0");
                sigma(i, i) = v;
                factor(i, i) = std::sqrt(v);
            }
            return {std::move(sigma), std::move(factor)};
        }
        case CovarianceSpec::Kind::factor_model: {
            if (spec.factors < 1) throw InvalidInputError("factor model needs at least one factor");
            if (spec.noise < 0.0) throw InvalidInputError("factor model noise must be >= 0");
            Eigen::MatrixXd loadings(p, spec.factors);
            for (std::int64_t i = 0; i < p; ++i)
                for (std::int64_t j = 0; j < spec.factors; ++j) loadings(i, j) = rng.gaussian();
            Eigen::MatrixXd sigma = loadings * loadings.transpose();
            sigma.diagonal().array() += spec.noise;
            return {from_eigen(sigma), psd_root(sigma, "factor model covariance")};
        }
        case CovarianceSpec::Kind::explicit_matrix: {
            if (spec.matrix.rows() != spec.matrix.cols() || spec.matrix.rows() < 1)
                throw InvalidInputError("explicit covariance must be a nonempty square matrix");
            const Eigen::MatrixXd sigma = to_eigen(spec.matrix);
            check_symmetric(sigma, "explicit covariance");
            return {spec.matrix, psd_root(sigma, "explicit covariance")};
        }
        case CovarianceSpec::Kind::scaled_block: {
            if (base == nullptr) throw InvalidInputError("scaled_block covariance needs a base matrix");
            if (base->rows() != base->cols() || base->rows() < 1)
                throw InvalidInputError("scaled_block base must be square");
            if (spec.block_factor <= 0.0) throw InvalidInputError("block factor must be > 0");
            std::int64_t size = spec.block_size > 0 ? spec.block_size : std::max<std::int64_t>(1, p / 4);
            if (size > p) size = p;
            const std::int64_t start = static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(p - size + 1)));
            const double root = std::sqrt(spec.block_factor);
            std::vector<double> diag(static_cast<std::size_t>(p), 1.0);
            for (std::int64_t i = start; i < start + size; ++i) diag[static_cast<std::size_t>(i)] = root;
            Matrix sigma(p, p);
            for (std::int64_t i = 0; i < p; ++i)
                for (std::int64_t j = 0; j < p; ++j)
                    sigma(i, j) = diag[static_cast<std::size_t>(i)] * diag[static_cast<std::size_t>(j)] * (*base)(i, j);
            return {sigma, psd_root(to_eigen(sigma), "scaled-block covariance")};
        }
    }
    throw InvalidInputError("unknown covariance spec kind");
}

namespace {

// Shared generator; tau = 0 means every row uses factor1. The Gaussian
// stream position of row i never depends on tau, so identical factors give
// bit-identical samples regardless of the break position.
MultiSample gen_rows(const Matrix& factor1, const Matrix& factor2, std::int64_t tau, std::int64_t n_rows,
                     rng::Stream& rng) {
    if (factor1.rows() != factor1.cols() || factor2.rows() != factor2.cols() || factor1.rows() != factor2.rows())
        throw DimensionMismatchError("factors must be square matrices of equal dimension");
    if (n_rows < 1) throw InvalidInputError("sample length must be >= 1");
    const std::int64_t p = factor1.rows();

    Matrix x(n_rows, p);
    std::vector<double> g(static_cast<std::size_t>(p));
    for (std::int64_t i = 0; i < n_rows; ++i) {
        for (std::int64_t j = 0; j < p; ++j) g[static_cast<std::size_t>(j)] = rng.gaussian();
        const Matrix& f = (tau > 0 && i >= tau) ? factor2 : factor1;
        double* row = x.row(i);
        for (std::int64_t r = 0; r < p; ++r) {
            double acc = 0.0;
            const double* frow = f.row(r);
            for (std::int64_t c = 0; c < p; ++c) acc += frow[c] * g[static_cast<std::size_t>(c)];
            row[r] = acc;
        }
    }
    return MultiSample(std::move(x));
}

}  // namespace

MultiSample gen_sample(const Matrix& factor, std::int64_t n_rows, rng::Stream& rng) {
    return gen_rows(factor, factor, 0, n_rows, rng);
}

MultiSample gen_break_sample(const Matrix& factor1, const Matrix& factor2, std::int64_t tau, std::int64_t n_rows,
                             rng::Stream& rng) {
    if (tau <= 0 || tau >= n_rows) throw OutOfRangeError("break position must satisfy 0 < tau < N");
    return gen_rows(factor1, factor2, tau, n_rows, rng);
}

double break_extent(const Matrix& sigma1, const Matrix& sigma2) {
    if (sigma1.rows() != sigma2.rows() || sigma1.cols() != sigma2.cols())
        throw DimensionMismatchError("break extent needs matrices of equal shape");
    double best = 0.0;
    for (std::int64_t i = 0; i < sigma1.rows(); ++i)
        for (std::int64_t j = 0; j < sigma1.cols(); ++j) {
            const double v = std::fabs(sigma1(i, j) - sigma2(i, j));
            if (v > best) best = v;
        }
    return best;
}

std::int64_t resolved_calib_hi(const ExperimentConfig& config) {
    return config.calib_hi == 0 ? config.n_obs : config.calib_hi;
}

void validate_config(const ExperimentConfig& config) {
    if (config.p < 1) throw ConfigError("dimension p must be >= 1");
    if (config.windows.count() == 0) throw ConfigError("window set is empty");
    if (config.n_obs < config.windows.min_sample_size())
        throw ConfigError("sample length " + std::to_string(config.n_obs) + " is too short for the largest window " +
                          std::to_string(config.windows.max_width()));
    const std::int64_t n_plus = config.windows.max_width();
    if (config.tau != 0 && !(n_plus < config.tau && config.tau < config.n_obs - n_plus))
        throw ConfigError("break position tau must satisfy n_plus < tau < N - n_plus (or 0 for no break)");
    const std::int64_t hi = resolved_calib_hi(config);
    if (config.calib_lo < 1 || hi > config.n_obs || hi - config.calib_lo + 1 < 2)
        throw ConfigError("calibration range [" + std::to_string(config.calib_lo) + ", " + std::to_string(hi) +
                          "] is invalid for sample length " + std::to_string(config.n_obs));
    if (config.replicates < boot::kMinReplicates)
        throw ConfigError("bootstrap replicate count must be >= " + std::to_string(boot::kMinReplicates));
    if (config.runs < 1) throw ConfigError("runs must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

namespace {

struct RealizedPair {
    RealizedCovariance sigma1;
    RealizedCovariance sigma2;
};

RealizedPair realize_pair(const ExperimentConfig& config) {
    rng::Stream cov_rng(rng::derive_seed(config.seed, kTagCovariance));
    CovarianceSpec s1 = config.sigma1;
    CovarianceSpec s2 = config.sigma2;
    if (s1.p == 0) s1.p = config.p;
    if (s2.p == 0) s2.p = config.p;
    RealizedPair pair;
    pair.sigma1 = realize_covariance(s1, cov_rng);
    pair.sigma2 = realize_covariance(s2, cov_rng, &pair.sigma1.sigma);
    if (pair.sigma1.sigma.rows() != config.p || pair.sigma2.sigma.rows() != config.p)
        throw ConfigError("realized covariance dimension does not match config.p");
    return pair;
}

ExperimentResult run_experiment_realized(const ExperimentConfig& config, const RealizedPair& pair, int threads) {
    const auto start = std::chrono::steady_clock::now();
    const std::int64_t calib_hi = resolved_calib_hi(config);

    ExperimentResult result;
    result.config = config;
    result.null_model = config.tau == 0;
    result.delta = result.null_model ? 0.0 : break_extent(pair.sigma1.sigma, pair.sigma2.sigma);
    result.per_run.resize(static_cast<std::size_t>(config.runs));

    parallel_for(config.runs, threads, [&](std::int64_t r) {
        rng::Stream data_rng(rng::derive_seed(config.seed, kTagRun, static_cast<std::uint64_t>(r)));
        const MultiSample sample =
            config.tau == 0 ? gen_sample(pair.sigma1.factor, config.n_obs, data_rng)
                            : gen_break_sample(pair.sigma1.factor, pair.sigma2.factor, config.tau, config.n_obs,
                                               data_rng);
        const boot::Calibration calibration =
            boot::calibrate(sample, config.windows, config.alpha, config.replicates,
                            rng::derive_seed(config.seed, kTagBootstrap, static_cast<std::uint64_t>(r)),
                            config.calib_lo, calib_hi, config.n_obs, /*threads=*/1);
        const detect::DetectionReport report = detect::detect_offline(sample, config.windows, calibration);
        RunDigest& digest = result.per_run[static_cast<std::size_t>(r)];
        digest.detected = report.rejected;
        if (report.rejected) {
            digest.n_hat = *report.n_hat;
            digest.tau_hat = *report.tau_hat;
            digest.lo = report.interval->lo;
            digest.hi = report.interval->hi;
        }
    });

    double n_hat_sum = 0.0;
    double delay_sum = 0.0;
    std::int64_t covered = 0;
    for (const RunDigest& digest : result.per_run) {
        if (!digest.detected) continue;
        ++result.detected_count;
        n_hat_sum += static_cast<double>(digest.n_hat);
        delay_sum += static_cast<double>(digest.tau_hat + digest.n_hat - 1 - config.tau);
        if (digest.lo <= config.tau && config.tau <= digest.hi) ++covered;
    }
    result.rate = static_cast<double>(result.detected_count) / static_cast<double>(config.runs);
    const bool any = result.detected_count > 0;
    result.mean_n_hat = any ? n_hat_sum / static_cast<double>(result.detected_count) : kNan;
    result.interval_coverage = (any && !result.null_model)
                                   ? static_cast<double>(covered) / static_cast<double>(result.detected_count)
                                   : kNan;
    result.mean_delay = (any && !result.null_model) ? delay_sum / static_cast<double>(result.detected_count) : kNan;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
    validate_config(config);
    return run_experiment_realized(config, realize_pair(config), threads);
}

std::vector<SweepRow> delay_sweep(const ExperimentConfig& base, const std::vector<double>& multipliers,
                                  int threads) {
    validate_config(base);
    if (base.tau == 0) throw ConfigError("delay sweep needs a break position (tau > 0) in the base config");
    if (multipliers.empty()) throw InvalidInputError("delay sweep needs at least one multiplier");
    for (std::size_t i = 0; i < multipliers.size(); ++i) {
        if (!(multipliers[i] >= 0.0 && multipliers[i] <= 1.0))
            throw InvalidInputError("multipliers must lie in [0, 1] (PSD is only guaranteed on the segment)");
        if (i > 0 && multipliers[i] < multipliers[i - 1])
            throw InvalidInputError("multipliers must be nondecreasing");
    }

    const RealizedPair pair = realize_pair(base);
    const std::int64_t p = base.p;

    std::vector<SweepRow> rows;
    rows.reserve(multipliers.size());
    for (const double m : multipliers) {
        Matrix blended(p, p);
        for (std::int64_t i = 0; i < p; ++i)
            for (std::int64_t j = 0; j < p; ++j)
                blended(i, j) = pair.sigma1.sigma(i, j) + m * (pair.sigma2.sigma(i, j) - pair.sigma1.sigma(i, j));

        ExperimentConfig config = base;
        config.sigma1 = CovarianceSpec{};
        config.sigma1.kind = CovarianceSpec::Kind::explicit_matrix;
        config.sigma1.matrix = pair.sigma1.sigma;
        config.sigma2 = CovarianceSpec{};
        config.sigma2.kind = CovarianceSpec::Kind::explicit_matrix;
        config.sigma2.matrix = blended;

        // Run seeds derive from the same base seed for every multiplier, so
        // the sweep sees the same Gaussian draws at each extent (common
        // random numbers).
        const ExperimentResult res = run_experiment(config, threads);
        SweepRow row;
        row.multiplier = m;
        row.delta = res.delta;
        row.detection_rate = res.rate;
        row.detected_count = res.detected_count;
        row.mean_delay = res.mean_delay;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace covbreak::sim
