#pragma once

#include "common/timefmt.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace tidal {

// Capture sessions anchor + k*interval for k = 0..floor(horizon/interval).
struct SchedulePlan {
    EpochSeconds anchor = 0;
    std::int64_t interval_s = 0;
    std::int64_t horizon_s = 0;
    std::vector<EpochSeconds> sessions;
};

// Observation counts for stories posted at any second of the steady-state
// interior, where the schedule repeats every interval. Live windows are
// half-open: [posted, posted + lifetime).
struct CoverageReport {
    std::int64_t lifetime_s = 0;
    std::int64_t interval_s = 0;
    std::int64_t min_observations = 0;
    std::int64_t max_observations = 0;
    std::int64_t margin_s = 0;      // lifetime - interval
    bool single_miss_safe = false;  // dropping any one session still sees every story
};

struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Ratio&) const = default;
};

// Throws InvalidInterval unless interval > 0 and horizon >= interval.
SchedulePlan plan_sessions(EpochSeconds anchor, std::int64_t interval_s, std::int64_t horizon_s);

// Sessions t with posting_time <= t < posting_time + lifetime. Throws
// InvalidInterval for lifetime <= 0.
std::vector<EpochSeconds> observing_sessions(EpochSeconds posting_time, std::int64_t lifetime_s,
                                             const SchedulePlan& plan);

// Throws PlanTooShort for plans with fewer than two sessions.
CoverageReport coverage_report(const SchedulePlan& plan, std::int64_t lifetime_s);

// Mean observations per story under uniform posting: lifetime / interval, reduced.
Ratio expected_observations(const SchedulePlan& plan, std::int64_t lifetime_s);

// Machine-readable report combining all of the above.
nlohmann::json plan_report_json(const SchedulePlan& plan, std::int64_t lifetime_s);

}  // namespace tidal
