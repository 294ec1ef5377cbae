#include "covbreak/detector.hpp"

#include <cmath>
#include <string>

#include "covbreak/errors.hpp"

namespace covbreak::detect {

DetectionReport detect_offline(const MultiSample& sample, const WindowSet& windows,
                               const boot::Calibration& calibration) {
    if (!(windows == calibration.windows))
        throw ConfigError("window set differs from the one the calibration thresholds were corrected over");
    if (sample.dim() != calibration.scaling.p)
        throw DimensionMismatchError("sample dimension " + std::to_string(sample.dim()) +
                                     " does not match calibrated dimension " +
                                     std::to_string(calibration.scaling.p));
    if (sample.size() != calibration.horizon)
        throw ConfigError("sample length " + std::to_string(sample.size()) +
                          " does not match calibrated horizon " + std::to_string(calibration.horizon));

    const Matrix w = stats::vec_outer_rows(sample);
    const std::vector<stats::StatisticsTrace> traces = stats::scan_all(w, calibration.scaling, windows);

    DetectionReport report;
    report.alpha = calibration.alpha;
    report.calib_full_range_warning =
        calibration.scaling.calib_lo == 1 && calibration.scaling.calib_hi == sample.size();
    report.per_window.reserve(traces.size());
    for (std::size_t j = 0; j < traces.size(); ++j) {
        const auto& trace = traces[j];
        WindowDecision decision;
        decision.n = trace.n;
        decision.statistic = trace.max_value;
        decision.threshold = calibration.thresholds[j];
        decision.exceeded = trace.max_value > decision.threshold;
        decision.argmax_center = trace.argmax_center;
        report.per_window.push_back(decision);
    }

    for (std::size_t j = 0; j < traces.size(); ++j) {
        if (!report.per_window[j].exceeded) continue;
        report.rejected = true;
        report.n_hat = traces[j].n;  // windows are ascending, so the first hit is the narrowest
        const auto& trace = traces[j];
        for (std::int64_t i = 0; i < trace.num_centers(); ++i) {
            if (trace.values[static_cast<std::size_t>(i)] > calibration.thresholds[j]) {
                report.tau_hat = trace.center_at(i);
                break;
            }
        }
        report.interval = Interval{*report.tau_hat - *report.n_hat, *report.tau_hat + *report.n_hat - 1};
        break;
    }
    return report;
}

Interval localize(const DetectionReport& report) {
    if (!report.rejected || !report.interval) throw NoDetectionError("localization requires a rejected report");
    return *report.interval;
}

OnlineDetector::OnlineDetector(boot::Calibration calibration, bool stop_on_first)
    : calibration_(std::move(calibration)), stop_on_first_(stop_on_first) {
    if (calibration_.thresholds.size() != calibration_.windows.count())
        throw ConfigError("calibration has " + std::to_string(calibration_.thresholds.size()) +
                          " thresholds for " + std::to_string(calibration_.windows.count()) + " windows");
    if (calibration_.horizon < calibration_.windows.min_sample_size())
        throw ConfigError("calibrated horizon is too short for the largest window");
    p_ = calibration_.scaling.p;
    d_ = calibration_.scaling.dim();
    // Advancing the widest window at consumed row r touches rows r-2n .. r:
    // 2n+1 live rows, so the ring must hold one more than two full windows.
    ring_rows_ = 2 * calibration_.windows.max_width() + 1;
    ring_.assign(static_cast<std::size_t>(ring_rows_ * d_), 0.0);
    outer_buf_.assign(static_cast<std::size_t>(d_), 0.0);
    for (const std::int64_t n : calibration_.windows.widths()) {
        states_.emplace_back(n, d_);
        weights_.push_back(stats::make_weights(calibration_.scaling, n));
    }
}

const double* OnlineDetector::ring_row(std::int64_t r) const {
    return ring_.data() + (r % ring_rows_) * d_;
}

std::optional<Alarm> OnlineDetector::push(const double* x, std::int64_t p) {
    if (p != p_)
        throw DimensionMismatchError("observation has " + std::to_string(p) + " coordinates, expected " +
                                     std::to_string(p_));
    if (triggered_ && stop_on_first_) return std::nullopt;  // frozen after the first alarm
    if (consumed_ >= calibration_.horizon)
        throw OutOfRangeError("observation " + std::to_string(consumed_ + 1) + " is beyond the calibrated horizon " +
                              std::to_string(calibration_.horizon));
    for (std::int64_t j = 0; j < p; ++j)
        if (!std::isfinite(x[j])) throw InvalidInputError("observation has a non-finite entry");

    const std::int64_t r = consumed_;
    kernels::active().outer_upper(x, static_cast<int>(p_), ring_.data() + (r % ring_rows_) * d_);
    ++consumed_;

    const auto row = [this](std::int64_t idx) { return ring_row(idx); };
    std::optional<Alarm> first;
    const auto& widths = calibration_.windows.widths();
    for (std::size_t j = 0; j < widths.size(); ++j) {
        const std::int64_t n = widths[j];
        if (r < 2 * n - 1) continue;  // no center of this width is complete yet
        if (r == 2 * n - 1)
            states_[j].reset(0, row);
        else
            states_[j].advance(r - 2 * n + 1, row);
        const double value = states_[j].value(weights_[j].data());
        if (value > calibration_.thresholds[j]) {
            Alarm alarm;
            alarm.t = r + 2 - n;  // 1-based center whose right window just completed
            alarm.n = n;
            alarm.statistic = value;
            alarm.threshold = calibration_.thresholds[j];
            alarm.emit_index = r + 1;
            alarms_.push_back(alarm);
            triggered_ = true;
            if (!first) first = alarm;
            if (stop_on_first_) return first;
        }
    }
    return first;
}

std::optional<Alarm> OnlineDetector::push(const std::vector<double>& x) {
    return push(x.data(), static_cast<std::int64_t>(x.size()));
}

}  // namespace covbreak::detect
