// Command-line front-end: calibrate thresholds on a sample, run the offline
// detector, monitor a stream of observations, or drive Monte Carlo
// experiments. Every command is deterministic given its flags and seed; the
// COVBREAK_SEED environment variable overrides --seed for CI reproducibility.
//
// Exit codes: 0 no break, 10 break detected, 1 usage/configuration error,
// 2 data error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covbreak/bootstrap.hpp"
#include "covbreak/detector.hpp"
#include "covbreak/errors.hpp"
#include "covbreak/ingest.hpp"
#include "covbreak/kernels.hpp"
#include "covbreak/serialize.hpp"
#include "covbreak/simulation.hpp"

namespace {

constexpr int kExitNoBreak = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBreak = 10;

struct IngestFlags {
    std::string input = "-";
    std::string delimiter = ",";
    bool header = false;
    bool log_returns = false;
    bool center = false;
};

void add_ingest_flags(CLI::App* cmd, IngestFlags& flags) {
    cmd->add_option("-i,--input", flags.input, "Input file of delimited rows ('-' = standard input)");
    cmd->add_option("--delimiter", flags.delimiter, "Cell delimiter (single character, default ',')");
    cmd->add_flag("--header", flags.header, "Skip the first row");
    cmd->add_flag("--log-returns", flags.log_returns, "Transform each column to log-returns (shrinks N by 1)");
    cmd->add_flag("--center", flags.center, "Subtract column means after transforms");
}

covbreak::io::IngestSpec to_spec(const IngestFlags& flags) {
    if (flags.delimiter.size() != 1) throw covbreak::ConfigError("--delimiter must be a single character");
    covbreak::io::IngestSpec spec;
    spec.path = flags.input;
    spec.delimiter = flags.delimiter[0];
    spec.header = flags.header;
    spec.log_returns = flags.log_returns;
    spec.center = flags.center;
    return spec;
}

covbreak::MultiSample load_sample(const IngestFlags& flags) {
    const covbreak::MultiSample sample = covbreak::io::ingest(to_spec(flags));
    if (!flags.center) {
        const double ratio = covbreak::io::max_mean_to_sd_ratio(sample);
        if (ratio > 0.5)
            std::cerr << "warning: a column mean is " << ratio
                      << "x its standard deviation; the statistics assume zero-mean data (consider --center)\n";
    }
    return sample;
}

// The environment variable wins over the flag so CI can pin seeds without
// touching command lines.
std::uint64_t resolve_seed(std::uint64_t flag_value) {
    const char* env = std::getenv("COVBREAK_SEED");
    if (env == nullptr || *env == '\0') return flag_value;
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw covbreak::ConfigError("COVBREAK_SEED must be an unsigned integer");
    return static_cast<std::uint64_t>(parsed);
}

std::vector<std::int64_t> parse_window_list(const std::string& raw) {
    std::vector<std::int64_t> widths;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            widths.push_back(std::stoll(item));
        } catch (const std::exception&) {
            throw covbreak::ConfigError("--windows must be a comma-separated list of integers");
        }
    }
    if (widths.empty()) throw covbreak::ConfigError("--windows must name at least one width");
    return widths;
}

// "lo:hi" (1-based, inclusive); empty = full sample.
std::pair<std::int64_t, std::int64_t> parse_calib_range(const std::string& raw) {
    if (raw.empty() || raw == "full") return {1, 0};
    const std::size_t colon = raw.find(':');
    if (colon == std::string::npos) throw covbreak::ConfigError("--calib-range must look like LO:HI");
    try {
        return {std::stoll(raw.substr(0, colon)), std::stoll(raw.substr(colon + 1))};
    } catch (const std::exception&) {
        throw covbreak::ConfigError("--calib-range must look like LO:HI with integer endpoints");
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw covbreak::DataError("cannot open output file: " + path);
    out << content;
    if (!out) throw covbreak::DataError("failed writing output file: " + path);
}

void print_calibration_summary(const covbreak::boot::Calibration& calibration) {
    std::printf("alpha        %s\n", covbreak::io::format_double(calibration.alpha).c_str());
    std::printf("alpha_star   %s%s\n", covbreak::io::format_double(calibration.alpha_star).c_str(),
                calibration.conservative_floor ? "  (conservative floor: 1/M exceeded the target level)" : "");
    std::printf("horizon      %lld\n", static_cast<long long>(calibration.horizon));
    std::printf("calib_range  [%lld, %lld]\n", static_cast<long long>(calibration.scaling.calib_lo),
                static_cast<long long>(calibration.scaling.calib_hi));
    std::printf("%8s  %s\n", "window", "threshold");
    for (std::size_t i = 0; i < calibration.windows.count(); ++i)
        std::printf("%8lld  %s\n", static_cast<long long>(calibration.windows.widths()[i]),
                    covbreak::io::format_double(calibration.thresholds[i]).c_str());
}

// ---- calibrate — estimate scaling and bootstrap thresholds ----

struct CalibrateArgs {
    IngestFlags ingest;
    std::string windows;
    double alpha = 0.05;
    std::int64_t replicates = 1000;
    std::uint64_t seed = 12345;
    std::string calib_range;
    std::int64_t horizon = 0;
    int threads = 0;
    std::string output = "calibration.json";
};

int cmd_calibrate(const CalibrateArgs& args) {
    const covbreak::MultiSample sample = load_sample(args.ingest);
    const auto [lo, hi] = parse_calib_range(args.calib_range);
    const covbreak::WindowSet windows{parse_window_list(args.windows)};
    const covbreak::boot::Calibration calibration =
        covbreak::boot::calibrate(sample, windows, args.alpha, args.replicates, resolve_seed(args.seed), lo, hi,
                                  args.horizon, args.threads);
    write_text_file(args.output, covbreak::io::calibration_to_json(calibration).dump(2) + "\n");
    print_calibration_summary(calibration);
    return kExitNoBreak;
}

// ---- detect — offline decision and localization ----

struct DetectArgs {
    IngestFlags ingest;
    std::string calibration_file;
    std::string windows;
    double alpha = 0.05;
    std::int64_t replicates = 1000;
    std::uint64_t seed = 12345;
    std::string calib_range;
    int threads = 0;
    std::string report = "report.json";
};

covbreak::boot::Calibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw covbreak::DataError("cannot open calibration file: " + path);
    covbreak::io::Json j;
    try {
        j = covbreak::io::Json::parse(in);
    } catch (const covbreak::io::Json::exception& e) {
        throw covbreak::DataError("calibration file is not valid JSON: " + std::string(e.what()));
    }
    return covbreak::io::calibration_from_json(j);
}

int cmd_detect(const DetectArgs& args) {
    const covbreak::MultiSample sample = load_sample(args.ingest);
    covbreak::boot::Calibration calibration;
    if (!args.calibration_file.empty()) {
        calibration = load_calibration(args.calibration_file);
    } else {
        if (args.windows.empty())
            throw covbreak::ConfigError("detect needs --calibration FILE or inline flags (at least --windows)");
        const auto [lo, hi] = parse_calib_range(args.calib_range);
        calibration = covbreak::boot::calibrate(sample, covbreak::WindowSet{parse_window_list(args.windows)},
                                                args.alpha, args.replicates, resolve_seed(args.seed), lo, hi,
                                                /*horizon=*/0, args.threads);
    }

    const covbreak::detect::DetectionReport report =
        covbreak::detect::detect_offline(sample, calibration.windows, calibration);
    write_text_file(args.report, covbreak::io::report_to_json(report).dump(2) + "\n");

    if (report.rejected) {
        std::printf("break detected: n_hat=%lld tau_hat=%lld interval=[%lld, %lld]\n",
                    static_cast<long long>(*report.n_hat), static_cast<long long>(*report.tau_hat),
                    static_cast<long long>(report.interval->lo), static_cast<long long>(report.interval->hi));
    } else {
        std::printf("no break detected at alpha=%s\n", covbreak::io::format_double(report.alpha).c_str());
    }
    for (const auto& decision : report.per_window)
        std::printf("  window %lld: statistic %s vs threshold %s%s\n", static_cast<long long>(decision.n),
                    covbreak::io::format_double(decision.statistic).c_str(),
                    covbreak::io::format_double(decision.threshold).c_str(), decision.exceeded ? "  EXCEEDED" : "");
    if (report.calib_full_range_warning)
        std::cerr << "warning: calibration range spans the whole sample; localization assumes a break-free "
                     "calibration range\n";
    return report.rejected ? kExitBreak : kExitNoBreak;
}

// ---- stream — online monitoring of stdin rows ----

struct StreamArgs {
    std::string calibration_file;
    std::string delimiter = ",";
    bool log_returns = false;
    bool stop_on_first = true;
};

int cmd_stream(const StreamArgs& args) {
    if (args.delimiter.size() != 1) throw covbreak::ConfigError("--delimiter must be a single character");
    const char delimiter = args.delimiter[0];
    covbreak::detect::OnlineDetector detector(load_calibration(args.calibration_file), args.stop_on_first);

    std::string line;
    std::string error;
    std::vector<double> row;
    std::vector<double> prev_prices;
    bool have_prev = false;
    std::int64_t parsed_rows = 0;
    std::int64_t skipped_rows = 0;
    bool horizon_refused = false;

    while (std::getline(std::cin, line)) {
        if (line.empty() || line == "\r") continue;
        ++parsed_rows;
        if (!covbreak::io::parse_row(line, delimiter, row, error)) {
            std::cerr << "error: input row " << parsed_rows << ", " << error << " (row skipped)\n";
            ++skipped_rows;
            continue;
        }
        if (args.log_returns) {
            bool positive = true;
            for (const double v : row)
                if (v <= 0.0) positive = false;
            if (!positive) {
                std::cerr << "error: input row " << parsed_rows << ": non-positive value under log-returns (row skipped)\n";
                ++skipped_rows;
                continue;
            }
            if (!have_prev) {
                prev_prices = row;
                have_prev = true;
                continue;  // first row only seeds the return computation
            }
            if (row.size() != prev_prices.size()) {
                std::cerr << "error: input row " << parsed_rows << ": width changed mid-stream (row skipped)\n";
                ++skipped_rows;
                continue;
            }
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double price = row[j];
                row[j] = std::log(price) - std::log(prev_prices[j]);
                prev_prices[j] = price;
            }
        }

        if (detector.consumed() >= detector.horizon()) {
            std::cerr << "error: observation beyond the calibrated horizon " << detector.horizon()
                      << "; stopping (recalibrate against a longer horizon to continue)\n";
            horizon_refused = true;
            break;
        }
        std::optional<covbreak::detect::Alarm> alarm;
        try {
            alarm = detector.push(row);
        } catch (const covbreak::DimensionMismatchError& e) {
            std::cerr << "error: input row " << parsed_rows << ": " << e.what() << " (row skipped)\n";
            ++skipped_rows;
            continue;
        }
        if (alarm) {
            // In log-all mode several windows can fire on one observation;
            // emit every alarm recorded for this consumption index.
            for (const auto& logged : detector.alarm_log())
                if (logged.emit_index == alarm->emit_index)
                    std::cout << covbreak::io::alarm_to_json(logged).dump() << "\n";
            if (args.stop_on_first) break;
        }
    }

    const bool alarmed = !detector.alarm_log().empty();
    if (skipped_rows > 0) {
        std::cerr << "skipped " << skipped_rows << " of " << parsed_rows << " input rows\n";
        if (static_cast<double>(skipped_rows) > 0.01 * static_cast<double>(parsed_rows) && !alarmed) return kExitData;
    }
    if (horizon_refused && !alarmed) return kExitData;
    return alarmed ? kExitBreak : kExitNoBreak;
}

// ---- simulate — Monte Carlo experiments from a job file ----

struct SimulateArgs {
    std::string config_file;
    std::string output_json = "results.json";
    std::string output_csv = "results.csv";
    int threads = 0;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& args) {
    std::ifstream in(args.config_file);
    if (!in) throw covbreak::DataError("cannot open config file: " + args.config_file);
    covbreak::io::Json j;
    try {
        j = covbreak::io::Json::parse(in);
    } catch (const covbreak::io::Json::exception& e) {
        throw covbreak::DataError("config file is not valid JSON: " + std::string(e.what()));
    }
    covbreak::io::SimulateJob job = covbreak::io::simulate_job_from_json(j);

    const char* env_seed = std::getenv("COVBREAK_SEED");
    for (auto& config : job.rows) {
        if (args.seed) config.seed = *args.seed;
        if (env_seed != nullptr && *env_seed != '\0') config.seed = resolve_seed(config.seed);
    }

    if (job.mode == covbreak::io::SimulateJob::Mode::sweep) {
        const std::vector<covbreak::sim::SweepRow> rows =
            covbreak::sim::delay_sweep(job.rows.front(), job.multipliers, args.threads);
        const std::string csv = covbreak::io::sweep_to_csv(rows);
        write_text_file(args.output_csv, csv);
        covbreak::io::Json out = covbreak::io::Json::array();
        for (const auto& row : rows) {
            covbreak::io::Json entry;
            entry["multiplier"] = row.multiplier;
            entry["delta"] = row.delta;
            entry["detection_rate"] = row.detection_rate;
            entry["detected_count"] = row.detected_count;
            entry["mean_delay"] = std::isnan(row.mean_delay) ? covbreak::io::Json(nullptr)
                                                             : covbreak::io::Json(row.mean_delay);
            out.push_back(std::move(entry));
        }
        write_text_file(args.output_json, out.dump(2) + "\n");
        std::printf("%12s %12s %16s %12s\n", "multiplier", "delta", "detection_rate", "mean_delay");
        for (const auto& row : rows)
            std::printf("%12s %12s %16s %12s\n", covbreak::io::format_double(row.multiplier).c_str(),
                        covbreak::io::format_double(row.delta).c_str(),
                        covbreak::io::format_double(row.detection_rate).c_str(),
                        std::isnan(row.mean_delay) ? "-" : covbreak::io::format_double(row.mean_delay).c_str());
        return kExitNoBreak;
    }

    std::vector<covbreak::sim::ExperimentResult> results;
    results.reserve(job.rows.size());
    for (const auto& config : job.rows) {
        results.push_back(covbreak::sim::run_experiment(config, args.threads));
        std::cerr << "finished " << results.back().config.label << " in "
                  << covbreak::io::format_double(results.back().wall_seconds) << "s\n";
    }

    covbreak::io::Json out = covbreak::io::Json::array();
    for (const auto& result : results) out.push_back(covbreak::io::experiment_result_to_json(result));
    write_text_file(args.output_json, out.dump(2) + "\n");
    write_text_file(args.output_csv, covbreak::io::experiment_results_to_csv(results));

    std::printf("%-20s %8s %8s %12s %12s\n", "windows", "kind", "rate", "mean_n_hat", "coverage");
    for (const auto& result : results)
        std::printf("%-20s %8s %8s %12s %12s\n", result.config.label.c_str(),
                    result.null_model ? "type1" : "power", covbreak::io::format_double(result.rate).c_str(),
                    std::isnan(result.mean_n_hat) ? "-" : covbreak::io::format_double(result.mean_n_hat).c_str(),
                    std::isnan(result.interval_coverage)
                        ? "-"
                        : covbreak::io::format_double(result.interval_coverage).c_str());
    return kExitNoBreak;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale covariance break detection with bootstrap-calibrated thresholds"};
    app.require_subcommand(1);

    CalibrateArgs cal;
    CLI::App* calibrate = app.add_subcommand("calibrate", "Estimate scaling and bootstrap thresholds from a sample");
    add_ingest_flags(calibrate, cal.ingest);
    calibrate->add_option("-w,--windows", cal.windows, "Comma-separated window widths, e.g. 7,15,30,60")->required();
    calibrate->add_option("-a,--alpha", cal.alpha, "Familywise level (default 0.05)");
    calibrate->add_option("-M,--replicates", cal.replicates, "Bootstrap replicates (default 1000, min 100)");
    calibrate->add_option("--seed", cal.seed, "RNG seed (env COVBREAK_SEED overrides)");
    calibrate->add_option("--calib-range", cal.calib_range, "Calibration rows LO:HI, 1-based inclusive (default full)");
    calibrate->add_option("--horizon", cal.horizon, "Stream length the thresholds target (default sample length)");
    calibrate->add_option("--threads", cal.threads, "Worker threads, 0 = auto (never changes results)");
    calibrate->add_option("-o,--output", cal.output, "Calibration JSON path (default calibration.json)");

    DetectArgs det;
    CLI::App* detect = app.add_subcommand("detect", "Offline break decision and localization on a sample");
    add_ingest_flags(detect, det.ingest);
    detect->add_option("-c,--calibration", det.calibration_file, "Calibration JSON from 'calibrate'");
    detect->add_option("-w,--windows", det.windows, "Inline calibration: window widths");
    detect->add_option("-a,--alpha", det.alpha, "Inline calibration: level (default 0.05)");
    detect->add_option("-M,--replicates", det.replicates, "Inline calibration: replicates (default 1000)");
    detect->add_option("--seed", det.seed, "Inline calibration: RNG seed (env COVBREAK_SEED overrides)");
    detect->add_option("--calib-range", det.calib_range, "Inline calibration: rows LO:HI (default full)");
    detect->add_option("--threads", det.threads, "Worker threads, 0 = auto");
    detect->add_option("-r,--report", det.report, "Detection report JSON path (default report.json)");

    StreamArgs str;
    CLI::App* stream = app.add_subcommand("stream", "Monitor rows from standard input against a calibration");
    stream->add_option("-c,--calibration", str.calibration_file, "Calibration JSON from 'calibrate'")->required();
    stream->add_option("--delimiter", str.delimiter, "Cell delimiter (default ',')");
    stream->add_flag("--log-returns", str.log_returns, "Consume prices, monitor their log-returns");
    stream->add_flag("--stop-on-first,!--no-stop-on-first", str.stop_on_first,
                     "Stop at the first alarm (default) or log every exceedance");

    SimulateArgs simu;
    CLI::App* simulate = app.add_subcommand("simulate", "Run Monte Carlo experiments from a JSON job file");
    simulate->add_option("config", simu.config_file, "Job file (experiment, table, or sweep)")->required();
    simulate->add_option("--output-json", simu.output_json, "Results JSON path (default results.json)");
    simulate->add_option("--output-csv", simu.output_csv, "Results CSV path (default results.csv)");
    simulate->add_option("--threads", simu.threads, "Worker threads, 0 = auto (never changes results)");
    std::uint64_t seed_flag = 0;
    CLI::Option* seed_opt = simulate->add_option("--seed", seed_flag, "Override every config seed");

    try {
        app.parse(argc, argv);
        if (seed_opt->count() > 0) simu.seed = seed_flag;
        if (calibrate->parsed()) return cmd_calibrate(cal);
        if (detect->parsed()) return cmd_detect(det);
        if (stream->parsed()) return cmd_stream(str);
        if (simulate->parsed()) return cmd_simulate(simu);
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const covbreak::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const covbreak::DimensionMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const covbreak::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
