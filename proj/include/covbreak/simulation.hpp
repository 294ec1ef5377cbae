#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covbreak/rng.hpp"
#include "covbreak/types.hpp"

// Synthetic data generation and the Monte Carlo experiment harness: type-I
// error rate under no break, power and localization under a planted break,
// and sensitivity sweeps over the break extent.

namespace covbreak::sim {

// Recipe for a covariance matrix. scaled_block derives its matrix from a base
// (the experiment's first-regime matrix): a random contiguous coordinate
// block is variance-scaled by `block_factor` via D * base * D with D diagonal.
struct CovarianceSpec {
    enum class Kind { identity, diagonal, factor_model, explicit_matrix, scaled_block };

    Kind kind = Kind::factor_model;
    std::int64_t p = 0;
    std::vector<double> diag_values;   // diagonal: per-coordinate variances
    std::int64_t factors = 3;          // factor_model: loading count k
    double noise = 0.1;                // factor_model: diagonal noise
    Matrix matrix;                     // explicit_matrix: the matrix itself
    double block_factor = 3.0;         // scaled_block: variance multiplier
    std::int64_t block_size = 0;       // scaled_block: 0 = max(1, p/4)
};

struct RealizedCovariance {
    Matrix sigma;    // p x p, symmetric PSD
    Matrix factor;   // p x p with factor * factor^T = sigma (within 1e-10)
};

// Realizes a spec. `base` is required for scaled_block and ignored otherwise.
// explicit_matrix specs are validated by a symmetric eigenfactorization
// (throws InvalidInputError when not PSD within tolerance).
RealizedCovariance realize_covariance(const CovarianceSpec& spec, rng::Stream& rng, const Matrix* base = nullptr);

// N rows X_i = factor * g_i with g_i i.i.d. standard normal.
MultiSample gen_sample(const Matrix& factor, std::int64_t n_rows, rng::Stream& rng);

// Rows 1..tau from factor1, rows tau+1..N from factor2. All N Gaussian draws
// come from the same stream positions regardless of tau, so factor1 ==
// factor2 reproduces gen_sample bit for bit.
MultiSample gen_break_sample(const Matrix& factor1, const Matrix& factor2, std::int64_t tau, std::int64_t n_rows,
                             rng::Stream& rng);

// Entrywise sup-norm of the difference.
double break_extent(const Matrix& sigma1, const Matrix& sigma2);

struct ExperimentConfig {
    std::string label;
    std::int64_t p = 10;
    std::int64_t n_obs = 300;          // sample length N
    std::int64_t tau = 0;              // 0 = no break
    CovarianceSpec sigma1;             // default factor_model(k=3, noise=0.1)
    CovarianceSpec sigma2;             // default scaled_block(factor=3)
    WindowSet windows;
    double alpha = 0.05;
    std::int64_t replicates = 1000;    // bootstrap M
    std::int64_t calib_lo = 1;         // calibration range, 1-based inclusive
    std::int64_t calib_hi = 0;         // 0 = full sample
    std::int64_t runs = 200;
    std::uint64_t seed = 1;
};

// Validates internal consistency (window-vs-N, tau-vs-windows, ranges);
// throws ConfigError. resolved_calib_hi is after the 0 = full-sample default.
void validate_config(const ExperimentConfig& config);
std::int64_t resolved_calib_hi(const ExperimentConfig& config);

struct RunDigest {
    bool detected = false;
    std::int64_t n_hat = 0;    // 0 when not detected
    std::int64_t tau_hat = 0;
    std::int64_t lo = 0;       // localization interval
    std::int64_t hi = 0;
};

struct ExperimentResult {
    ExperimentConfig config;
    bool null_model = false;           // tau == 0: rate is a type-I rate, else power
    double rate = 0.0;                 // detected / runs
    std::int64_t detected_count = 0;
    double mean_n_hat = 0.0;           // over detected runs; NaN when none
    double interval_coverage = 0.0;    // fraction of detected runs whose interval contains tau; NaN when H0/none
    double mean_delay = 0.0;           // mean (tau_hat + n_hat - 1 - tau) over detected; NaN when H0/none
    double delta = 0.0;                // break extent between the realized matrices (0 under H0)
    std::vector<RunDigest> per_run;
    double wall_seconds = 0.0;         // diagnostic only; excluded from serialized outputs
};

// Realizes both covariances once from the config seed, then runs `runs`
// independent replications (derived seeds): generate, calibrate on the
// configured range, detect offline, aggregate. Pure function of the config.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

struct SweepRow {
    double multiplier = 0.0;       // position on the line from sigma1 (0) to sigma2 (1)
    double delta = 0.0;            // realized break extent
    double detection_rate = 0.0;
    std::int64_t detected_count = 0;
    double mean_delay = 0.0;       // NaN when nothing detected
};

// Break-extent sweep: realizes the base config's covariances once, then for
// each multiplier m runs the experiment with sigma2 replaced by
// sigma1 + m * (sigma2 - sigma1), whose extent scales exactly linearly in m.
// Multipliers must lie in [0, 1] (PSD is only guaranteed on the segment);
// m = 0 recovers the no-break null.
std::vector<SweepRow> delay_sweep(const ExperimentConfig& base, const std::vector<double>& multipliers,
                                  int threads = 1);

}  // namespace covbreak::sim
