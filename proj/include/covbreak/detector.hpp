#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "covbreak/bootstrap.hpp"
#include "covbreak/detail/sliding.hpp"
#include "covbreak/stats.hpp"
#include "covbreak/types.hpp"

// Decision rule and localization. A break is declared when any window's max
// statistic strictly exceeds its calibrated threshold; the narrowest
// detecting window n_hat and its first exceeding center tau_hat localize the
// break in [tau_hat - n_hat, tau_hat + n_hat - 1]. The online detector runs
// the identical arithmetic as a streaming state machine over a ring buffer.

namespace covbreak::detect {

struct Interval {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool contains(std::int64_t t) const { return lo <= t && t <= hi; }
};

struct WindowDecision {
    std::int64_t n = 0;
    double statistic = 0.0;        // B_n = max over centers
    double threshold = 0.0;
    bool exceeded = false;         // statistic > threshold (strict)
    std::int64_t argmax_center = 0;
};

struct DetectionReport {
    bool rejected = false;
    double alpha = 0.0;
    std::vector<WindowDecision> per_window;        // ascending n
    std::optional<std::int64_t> n_hat;             // narrowest exceeding window
    std::optional<std::int64_t> tau_hat;           // its first exceeding center
    std::optional<Interval> interval;              // [tau_hat - n_hat, tau_hat + n_hat - 1]
    // True when the calibration range spans the whole analyzed sample; the
    // localization guarantee assumes a break-free calibration range, so this
    // flags reports whose interval should be read with care.
    bool calib_full_range_warning = false;
};

// Offline decision over a full sample. `windows` must equal the calibration's
// windows (the thresholds are only valid for the set they were corrected
// over); the sample length must match the calibrated horizon.
DetectionReport detect_offline(const MultiSample& sample, const WindowSet& windows,
                               const boot::Calibration& calibration);

// Localization interval of a rejecting report; throws NoDetectionError
// otherwise.
Interval localize(const DetectionReport& report);

struct Alarm {
    std::int64_t t = 0;            // central point
    std::int64_t n = 0;            // window width
    double statistic = 0.0;
    double threshold = 0.0;
    std::int64_t emit_index = 0;   // consumption index t + n - 1 at which the alarm fired
};

// Streaming detector. Feed observations one at a time with push(); a window
// width n produces the statistic for center t at consumption index t + n - 1
// (the first moment its right window is complete). With stop_on_first (the
// default) the detector freezes after its first alarm; otherwise it logs
// every exceedance, which reproduces the offline exceedance set exactly.
class OnlineDetector {
public:
    explicit OnlineDetector(boot::Calibration calibration, bool stop_on_first = true);

    // Consumes one observation of length p. Returns the alarm raised by this
    // observation, if any (the smallest exceeding n when several windows fire
    // at the same index). Throws OutOfRangeError when pushed beyond the
    // calibrated horizon and DimensionMismatchError on a wrong-length row.
    std::optional<Alarm> push(const double* x, std::int64_t p);
    std::optional<Alarm> push(const std::vector<double>& x);

    const std::vector<Alarm>& alarm_log() const { return alarms_; }
    std::int64_t consumed() const { return consumed_; }
    std::int64_t horizon() const { return calibration_.horizon; }
    bool triggered() const { return triggered_; }
    const boot::Calibration& calibration() const { return calibration_; }

private:
    const double* ring_row(std::int64_t r) const;

    boot::Calibration calibration_;
    bool stop_on_first_;
    std::int64_t p_ = 0;
    std::int64_t d_ = 0;
    std::int64_t ring_rows_ = 0;                   // 2 * n_plus + 1 (widest advance spans 2n+1 rows)
    std::vector<double> ring_;                     // ring_rows_ x d, keyed by absolute row % ring_rows_
    std::vector<double> outer_buf_;                // scratch for vec_outer of the incoming row
    std::vector<detail::SlidingStat> states_;      // one per window, ascending n
    std::vector<std::vector<double>> weights_;     // one per window
    std::vector<Alarm> alarms_;
    std::int64_t consumed_ = 0;
    bool triggered_ = false;
};

}  // namespace covbreak::detect
