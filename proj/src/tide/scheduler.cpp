#include "tide/scheduler.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <numeric>

namespace tidal {

SchedulePlan plan_sessions(EpochSeconds anchor, std::int64_t interval_s, std::int64_t horizon_s) {
    if (interval_s <= 0) fail(ErrorCode::InvalidInterval, "interval must be positive");
    if (horizon_s < interval_s) fail(ErrorCode::InvalidInterval, "horizon must be at least one interval");
    SchedulePlan plan{anchor, interval_s, horizon_s, {}};
    const std::int64_t n = horizon_s / interval_s;
    plan.sessions.reserve(static_cast<std::size_t>(n + 1));
    for (std::int64_t k = 0; k <= n; ++k) plan.sessions.push_back(anchor + k * interval_s);
    return plan;
}

std::vector<EpochSeconds> observing_sessions(EpochSeconds posting_time, std::int64_t lifetime_s,
                                             const SchedulePlan& plan) {
    if (lifetime_s <= 0) fail(ErrorCode::InvalidInterval, "lifetime must be positive");
    auto first = std::lower_bound(plan.sessions.begin(), plan.sessions.end(), posting_time);
    auto last = std::lower_bound(first, plan.sessions.end(), posting_time + lifetime_s);
    return {first, last};
}

namespace {

// Sessions at every multiple of `interval` (offset removed) inside
// [p, p + lifetime), for 0 <= p.
std::int64_t periodic_count(std::int64_t p, std::int64_t lifetime, std::int64_t interval) {
    auto ceil_div = [](std::int64_t a, std::int64_t b) { return (a + b - 1) / b; };
    return ceil_div(p + lifetime, interval) - ceil_div(p, interval);
}

}  // namespace

CoverageReport coverage_report(const SchedulePlan& plan, std::int64_t lifetime_s) {
    if (plan.sessions.size() < 2) fail(ErrorCode::PlanTooShort, "coverage needs a plan with at least two sessions");
    if (lifetime_s <= 0) fail(ErrorCode::InvalidInterval, "lifetime must be positive");
    const std::int64_t interval = plan.interval_s;

    // The count is constant between the points where a session leaves the
    // window (p passes a session) or enters it (p + lifetime passes one), so
    // these offsets within one period cover every distinct value.
    const std::int64_t enter = ((-lifetime_s) % interval + interval) % interval;
    std::vector<std::int64_t> probes{0, 1, enter, enter + 1, interval - 1};

    CoverageReport r;
    r.lifetime_s = lifetime_s;
    r.interval_s = interval;
    r.margin_s = lifetime_s - interval;
    bool first = true;
    for (auto p : probes) {
        if (p < 0 || p >= interval) continue;
        const auto c = periodic_count(p, lifetime_s, interval);
        r.min_observations = first ? c : std::min(r.min_observations, c);
        r.max_observations = first ? c : std::max(r.max_observations, c);
        first = false;
    }
    // Removing one session lowers any story's count by at most one, and some
    // story at the minimum loses one of its sessions.
    r.single_miss_safe = r.min_observations >= 2;
    return r;
}

Ratio expected_observations(const SchedulePlan& plan, std::int64_t lifetime_s) {
    if (plan.interval_s <= 0) fail(ErrorCode::InvalidInterval, "interval must be positive");
    if (lifetime_s <= 0) fail(ErrorCode::InvalidInterval, "lifetime must be positive");
    const auto g = std::gcd(lifetime_s, plan.interval_s);
    return {lifetime_s / g, plan.interval_s / g};
}

nlohmann::json plan_report_json(const SchedulePlan& plan, std::int64_t lifetime_s) {
    const auto cov = coverage_report(plan, lifetime_s);
    const auto expected = expected_observations(plan, lifetime_s);
    return {
        {"anchor", plan.anchor},
        {"interval_s", plan.interval_s},
        {"horizon_s", plan.horizon_s},
        {"lifetime_s", lifetime_s},
        {"session_count", plan.sessions.size()},
        {"sessions", plan.sessions},
        {"coverage",
         {{"min_observations", cov.min_observations},
          {"max_observations", cov.max_observations},
          {"margin_s", cov.margin_s},
          {"single_miss_safe", cov.single_miss_safe},
          {"window", "half-open [posted, posted + lifetime)"},
          {"analysis", "steady-state periodic interior; first and last sessions excluded"}}},
        {"expected_observations",
         {{"num", expected.num}, {"den", expected.den}, {"value", expected.value()}}},
    };
}

}  // namespace tidal
