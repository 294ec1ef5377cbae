#include "covbreak/serialize.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "covbreak/errors.hpp"

namespace covbreak::io {

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t fnv1a_bytes(std::uint64_t hash, const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t fnv1a_u64(std::uint64_t hash, std::uint64_t v) { return fnv1a_bytes(hash, &v, sizeof(v)); }

Json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

// Throws DataError with a field-level message instead of leaking json
// exceptions to callers.
template <typename T>
T get_field(const Json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw DataError(std::string("field '") + key + "' has the wrong type: " + e.what());
    }
}

template <typename T>
T get_field_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return get_field<T>(j, key);
}

std::string windows_label(const WindowSet& windows) {
    std::string out = "{";
    for (std::size_t i = 0; i < windows.widths().size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(windows.widths()[i]);
    }
    out += "}";
    return out;
}

std::string windows_cell(const WindowSet& windows) {
    std::string out;
    for (std::size_t i = 0; i < windows.widths().size(); ++i) {
        if (i > 0) out += "|";
        out += std::to_string(windows.widths()[i]);
    }
    return out;
}

std::string csv_cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

// Labels are free-form (the default for a multi-window set is "{10,40}"), so
// cells holding them get RFC 4180 quoting when they would break the row.
std::string csv_text_cell(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (const char ch : text) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

const char* covariance_kind_name(sim::CovarianceSpec::Kind kind) {
    switch (kind) {
        case sim::CovarianceSpec::Kind::identity: return "identity";
        case sim::CovarianceSpec::Kind::diagonal: return "diagonal";
        case sim::CovarianceSpec::Kind::factor_model: return "factor_model";
        case sim::CovarianceSpec::Kind::explicit_matrix: return "explicit";
        case sim::CovarianceSpec::Kind::scaled_block: return "scaled_block";
    }
    return "unknown";
}

Json covariance_spec_to_json(const sim::CovarianceSpec& spec) {
    Json j;
    j["kind"] = covariance_kind_name(spec.kind);
    switch (spec.kind) {
        case sim::CovarianceSpec::Kind::identity: break;
        case sim::CovarianceSpec::Kind::diagonal: j["values"] = spec.diag_values; break;
        case sim::CovarianceSpec::Kind::factor_model:
            j["factors"] = spec.factors;
            j["noise"] = spec.noise;
            break;
        case sim::CovarianceSpec::Kind::explicit_matrix: {
            Json rows = Json::array();
            for (std::int64_t i = 0; i < spec.matrix.rows(); ++i) {
                Json row = Json::array();
                for (std::int64_t c = 0; c < spec.matrix.cols(); ++c) row.push_back(spec.matrix(i, c));
                rows.push_back(std::move(row));
            }
            j["matrix"] = std::move(rows);
            break;
        }
        case sim::CovarianceSpec::Kind::scaled_block:
            j["factor"] = spec.block_factor;
            j["size"] = spec.block_size;
            break;
    }
    return j;
}

void check_known_keys(const Json& j, std::initializer_list<const char*> known, const char* what) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(std::string("unknown key '") + item.key() + "' in " + what);
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("double formatting failed");
    return std::string(buf, ptr);
}

std::string scaling_digest(const stats::ScalingVector& scaling) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    hash = fnv1a_u64(hash, static_cast<std::uint64_t>(scaling.p));
    hash = fnv1a_u64(hash, static_cast<std::uint64_t>(scaling.calib_lo));
    hash = fnv1a_u64(hash, static_cast<std::uint64_t>(scaling.calib_hi));
    for (const double sig : scaling.sigma) hash = fnv1a_u64(hash, std::bit_cast<std::uint64_t>(sig));
    for (const std::uint8_t a : scaling.active) hash = fnv1a_bytes(hash, &a, 1);
    char buf[17];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), hash, 16);
    (void)ec;
    std::string hex(buf, ptr);
    return std::string(16 - hex.size(), '0') + hex;
}

Json calibration_to_json(const boot::Calibration& calibration) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["alpha"] = calibration.alpha;
    j["alpha_star"] = calibration.alpha_star;
    j["conservative_floor"] = calibration.conservative_floor;
    j["replicates"] = calibration.replicates;
    j["seed"] = calibration.seed;
    j["horizon"] = calibration.horizon;
    j["windows"] = calibration.windows.widths();
    Json thresholds = Json::array();
    for (std::size_t i = 0; i < calibration.thresholds.size(); ++i) {
        Json entry;
        entry["n"] = calibration.windows.widths()[i];
        entry["threshold"] = calibration.thresholds[i];
        thresholds.push_back(std::move(entry));
    }
    j["thresholds"] = std::move(thresholds);
    Json range;
    range["lo"] = calibration.scaling.calib_lo;
    range["hi"] = calibration.scaling.calib_hi;
    j["calib_range"] = std::move(range);
    Json scaling;
    scaling["p"] = calibration.scaling.p;
    scaling["sigma"] = calibration.scaling.sigma;
    scaling["active"] = calibration.scaling.active;
    scaling["digest"] = scaling_digest(calibration.scaling);
    j["scaling"] = std::move(scaling);
    return j;
}

boot::Calibration calibration_from_json(const Json& j) {
    if (get_field<int>(j, "format_version") != kFormatVersion)
        throw DataError("unsupported calibration format version");

    boot::Calibration out;
    out.alpha = get_field<double>(j, "alpha");
    out.alpha_star = get_field<double>(j, "alpha_star");
    out.conservative_floor = get_field<bool>(j, "conservative_floor");
    out.replicates = get_field<std::int64_t>(j, "replicates");
    out.seed = get_field<std::uint64_t>(j, "seed");
    out.horizon = get_field<std::int64_t>(j, "horizon");
    out.windows = WindowSet(get_field<std::vector<std::int64_t>>(j, "windows"));

    const Json thresholds = get_field<Json>(j, "thresholds");
    if (!thresholds.is_array()) throw DataError("field 'thresholds' must be an array");
    std::map<std::int64_t, double> by_n;
    for (const Json& entry : thresholds) by_n[get_field<std::int64_t>(entry, "n")] = get_field<double>(entry, "threshold");
    if (by_n.size() != out.windows.count()) throw DataError("threshold entries do not match the window set");
    for (const std::int64_t n : out.windows.widths()) {
        const auto it = by_n.find(n);
        if (it == by_n.end()) throw DataError("missing threshold for window " + std::to_string(n));
        out.thresholds.push_back(it->second);
    }

    const Json range = get_field<Json>(j, "calib_range");
    const Json scaling = get_field<Json>(j, "scaling");
    out.scaling.p = get_field<std::int64_t>(scaling, "p");
    out.scaling.calib_lo = get_field<std::int64_t>(range, "lo");
    out.scaling.calib_hi = get_field<std::int64_t>(range, "hi");
    out.scaling.sigma = get_field<std::vector<double>>(scaling, "sigma");
    out.scaling.active = get_field<std::vector<std::uint8_t>>(scaling, "active");
    if (static_cast<std::int64_t>(out.scaling.sigma.size()) != coord::tri_dim(out.scaling.p))
        throw DataError("scaling sigma length does not match dimension p");
    if (out.scaling.active.size() != out.scaling.sigma.size())
        throw DataError("scaling active mask length does not match sigma");
    const std::string digest = get_field<std::string>(scaling, "digest");
    if (digest != scaling_digest(out.scaling)) throw DataError("scaling digest mismatch: calibration file corrupted");
    return out;
}

Json report_to_json(const detect::DetectionReport& report) {
    Json j;
    j["rejected"] = report.rejected;
    j["alpha"] = report.alpha;
    Json per_window = Json::array();
    for (const auto& decision : report.per_window) {
        Json entry;
        entry["n"] = decision.n;
        entry["statistic"] = decision.statistic;
        entry["threshold"] = decision.threshold;
        entry["exceeded"] = decision.exceeded;
        entry["argmax_center"] = decision.argmax_center;
        per_window.push_back(std::move(entry));
    }
    j["per_window"] = std::move(per_window);
    j["n_hat"] = report.n_hat ? Json(*report.n_hat) : Json(nullptr);
    j["tau_hat"] = report.tau_hat ? Json(*report.tau_hat) : Json(nullptr);
    if (report.interval) {
        Json interval;
        interval["lo"] = report.interval->lo;
        interval["hi"] = report.interval->hi;
        j["interval"] = std::move(interval);
    } else {
        j["interval"] = nullptr;
    }
    j["calib_full_range_warning"] = report.calib_full_range_warning;
    return j;
}

Json alarm_to_json(const detect::Alarm& alarm) {
    Json j;
    j["emit_index"] = alarm.emit_index;
    j["t"] = alarm.t;
    j["n"] = alarm.n;
    j["statistic"] = alarm.statistic;
    j["threshold"] = alarm.threshold;
    return j;
}

Json experiment_result_to_json(const sim::ExperimentResult& result) {
    Json config;
    config["label"] = result.config.label;
    config["p"] = result.config.p;
    config["N"] = result.config.n_obs;
    config["tau"] = result.config.tau;
    config["windows"] = result.config.windows.widths();
    config["alpha"] = result.config.alpha;
    config["replicates"] = result.config.replicates;
    Json range;
    range["lo"] = result.config.calib_lo;
    range["hi"] = sim::resolved_calib_hi(result.config);
    config["calib_range"] = std::move(range);
    config["runs"] = result.config.runs;
    config["seed"] = result.config.seed;
    config["sigma1"] = covariance_spec_to_json(result.config.sigma1);
    config["sigma2"] = covariance_spec_to_json(result.config.sigma2);

    Json j;
    j["config"] = std::move(config);
    j["rate_kind"] = result.null_model ? "type1" : "power";
    j["rate"] = result.rate;
    j["detected_count"] = result.detected_count;
    j["mean_n_hat"] = number_or_null(result.mean_n_hat);
    j["interval_coverage"] = number_or_null(result.interval_coverage);
    j["mean_delay"] = number_or_null(result.mean_delay);
    j["delta"] = result.delta;
    Json per_run = Json::array();
    for (const auto& digest : result.per_run) {
        Json entry;
        entry["detected"] = digest.detected;
        if (digest.detected) {
            entry["n_hat"] = digest.n_hat;
            entry["tau_hat"] = digest.tau_hat;
            Json interval;
            interval["lo"] = digest.lo;
            interval["hi"] = digest.hi;
            entry["interval"] = std::move(interval);
        }
        per_run.push_back(std::move(entry));
    }
    j["per_run"] = std::move(per_run);
    return j;
}

std::string experiment_results_to_csv(const std::vector<sim::ExperimentResult>& results) {
    std::string out =
        "label,windows,p,N,tau,alpha,replicates,runs,calib_lo,calib_hi,delta,rate_kind,rate,detected_count,"
        "mean_n_hat,interval_coverage,mean_delay\n";
    for (const auto& r : results) {
        out += csv_text_cell(r.config.label) + ",";
        out += windows_cell(r.config.windows) + ",";
        out += std::to_string(r.config.p) + ",";
        out += std::to_string(r.config.n_obs) + ",";
        out += std::to_string(r.config.tau) + ",";
        out += format_double(r.config.alpha) + ",";
        out += std::to_string(r.config.replicates) + ",";
        out += std::to_string(r.config.runs) + ",";
        out += std::to_string(r.config.calib_lo) + ",";
        out += std::to_string(sim::resolved_calib_hi(r.config)) + ",";
        out += format_double(r.delta) + ",";
        out += (r.null_model ? "type1" : "power");
        out += ",";
        out += format_double(r.rate) + ",";
        out += std::to_string(r.detected_count) + ",";
        out += csv_cell(r.mean_n_hat) + ",";
        out += csv_cell(r.interval_coverage) + ",";
        out += csv_cell(r.mean_delay) + "\n";
    }
    return out;
}

std::string sweep_to_csv(const std::vector<sim::SweepRow>& rows) {
    std::string out = "multiplier,delta,detection_rate,detected_count,mean_delay\n";
    for (const auto& r : rows) {
        out += format_double(r.multiplier) + ",";
        out += format_double(r.delta) + ",";
        out += format_double(r.detection_rate) + ",";
        out += std::to_string(r.detected_count) + ",";
        out += csv_cell(r.mean_delay) + "\n";
    }
    return out;
}

sim::CovarianceSpec covariance_spec_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("covariance spec must be an object");
    const std::string kind = get_field<std::string>(j, "kind");
    sim::CovarianceSpec spec;
    if (kind == "identity") {
        check_known_keys(j, {"kind"}, "identity covariance spec");
        spec.kind = sim::CovarianceSpec::Kind::identity;
    } else if (kind == "diagonal") {
        check_known_keys(j, {"kind", "values"}, "diagonal covariance spec");
        spec.kind = sim::CovarianceSpec::Kind::diagonal;
        spec.diag_values = get_field<std::vector<double>>(j, "values");
    } else if (kind == "factor_model") {
        check_known_keys(j, {"kind", "factors", "noise"}, "factor model covariance spec");
        spec.kind = sim::CovarianceSpec::Kind::factor_model;
        spec.factors = get_field_or<std::int64_t>(j, "factors", 3);
        spec.noise = get_field_or<double>(j, "noise", 0.1);
    } else if (kind == "explicit") {
        check_known_keys(j, {"kind", "matrix"}, "explicit covariance spec");
        spec.kind = sim::CovarianceSpec::Kind::explicit_matrix;
        const Json rows = get_field<Json>(j, "matrix");
        if (!rows.is_array() || rows.empty()) throw ConfigError("explicit covariance matrix must be a nonempty array");
        const std::int64_t p = static_cast<std::int64_t>(rows.size());
        spec.matrix = Matrix(p, p);
        for (std::int64_t i = 0; i < p; ++i) {
            const auto row = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
            if (static_cast<std::int64_t>(row.size()) != p) throw ConfigError("explicit covariance matrix must be square");
            for (std::int64_t c = 0; c < p; ++c) spec.matrix(i, c) = row[static_cast<std::size_t>(c)];
        }
    } else if (kind == "scaled_block") {
        check_known_keys(j, {"kind", "factor", "size"}, "scaled-block covariance spec");
        spec.kind = sim::CovarianceSpec::Kind::scaled_block;
        spec.block_factor = get_field_or<double>(j, "factor", 3.0);
        spec.block_size = get_field_or<std::int64_t>(j, "size", 0);
    } else {
        throw ConfigError("unknown covariance kind '" + kind + "'");
    }
    return spec;
}

sim::ExperimentConfig experiment_config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be an object");
    check_known_keys(j,
                     {"label", "p", "N", "tau", "windows", "alpha", "replicates", "runs", "seed", "calib_range",
                      "sigma1", "sigma2"},
                     "experiment config");
    sim::ExperimentConfig config;
    config.label = get_field_or<std::string>(j, "label", "");
    config.p = get_field<std::int64_t>(j, "p");
    config.n_obs = get_field<std::int64_t>(j, "N");
    config.tau = get_field_or<std::int64_t>(j, "tau", 0);
    config.windows = WindowSet(get_field<std::vector<std::int64_t>>(j, "windows"));
    config.alpha = get_field_or<double>(j, "alpha", 0.05);
    config.replicates = get_field_or<std::int64_t>(j, "replicates", 1000);
    config.runs = get_field_or<std::int64_t>(j, "runs", 200);
    config.seed = get_field_or<std::uint64_t>(j, "seed", 1);
    if (j.contains("calib_range")) {
        const Json& range = j.at("calib_range");
        if (range.is_string()) {
            if (range.get<std::string>() != "full")
                throw ConfigError("calib_range must be \"full\" or an object {\"lo\":..,\"hi\":..}");
            config.calib_lo = 1;
            config.calib_hi = 0;
        } else {
            check_known_keys(range, {"lo", "hi"}, "calib_range");
            config.calib_lo = get_field<std::int64_t>(range, "lo");
            config.calib_hi = get_field<std::int64_t>(range, "hi");
        }
    }
    if (j.contains("sigma1")) config.sigma1 = covariance_spec_from_json(j.at("sigma1"));
    if (j.contains("sigma2")) {
        config.sigma2 = covariance_spec_from_json(j.at("sigma2"));
    } else {
        config.sigma2.kind = sim::CovarianceSpec::Kind::scaled_block;
    }
    config.sigma1.p = config.p;
    config.sigma2.p = config.p;
    if (config.label.empty()) config.label = windows_label(config.windows);
    return config;
}

SimulateJob simulate_job_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("simulation job must be a JSON object");
    const std::string mode = get_field_or<std::string>(j, "mode", "experiment");
    SimulateJob job;
    if (mode == "experiment") {
        Json config = j;
        config.erase("mode");
        job.mode = SimulateJob::Mode::experiment;
        job.rows.push_back(experiment_config_from_json(config));
    } else if (mode == "table") {
        check_known_keys(j, {"mode", "base", "rows"}, "table job");
        const Json base = get_field<Json>(j, "base");
        const Json rows = get_field<Json>(j, "rows");
        if (!rows.is_array() || rows.empty()) throw ConfigError("table job needs a nonempty 'rows' array");
        job.mode = SimulateJob::Mode::table;
        for (const Json& row : rows) {
            Json merged = base;
            merged.update(row);
            job.rows.push_back(experiment_config_from_json(merged));
        }
    } else if (mode == "sweep") {
        check_known_keys(j, {"mode", "base", "multipliers"}, "sweep job");
        job.mode = SimulateJob::Mode::sweep;
        job.rows.push_back(experiment_config_from_json(get_field<Json>(j, "base")));
        job.multipliers = get_field<std::vector<double>>(j, "multipliers");
    } else {
        throw ConfigError("mode must be one of: experiment, table, sweep");
    }
    return job;
}

}  // namespace covbreak::io
