#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "covbreak/bootstrap.hpp"
#include "covbreak/detector.hpp"
#include "covbreak/simulation.hpp"

// JSON/CSV serialization with stable field names, stable key order and
// deterministic number formatting (shortest round-trip representation), so
// identical inputs always produce byte-identical documents. Schemas are
// documented in docs/output-formats.md and pinned by golden-file tests.

namespace covbreak::io {

using Json = nlohmann::ordered_json;

// FNV-1a hash (hex) over the scaling's dimensions and sigma bytes; embedded
// in calibration files as a quick integrity check.
std::string scaling_digest(const stats::ScalingVector& scaling);

Json calibration_to_json(const boot::Calibration& calibration);
boot::Calibration calibration_from_json(const Json& j);

Json report_to_json(const detect::DetectionReport& report);
Json alarm_to_json(const detect::Alarm& alarm);

Json experiment_result_to_json(const sim::ExperimentResult& result);

// One CSV row per experiment; header included. Empty numeric cells stand for
// not-applicable (e.g. localization columns under the null).
std::string experiment_results_to_csv(const std::vector<sim::ExperimentResult>& results);
std::string sweep_to_csv(const std::vector<sim::SweepRow>& rows);

// Simulation job file: either a single experiment, a table of rows sharing a
// base, or a break-extent sweep.
struct SimulateJob {
    enum class Mode { experiment, table, sweep };
    Mode mode = Mode::experiment;
    std::vector<sim::ExperimentConfig> rows;   // one entry for experiment/sweep
    std::vector<double> multipliers;           // sweep only
};

sim::CovarianceSpec covariance_spec_from_json(const Json& j);
sim::ExperimentConfig experiment_config_from_json(const Json& j);
SimulateJob simulate_job_from_json(const Json& j);

// Shortest round-trip decimal rendering of a double (also used for CSV).
std::string format_double(double v);

}  // namespace covbreak::io
