#include "common/timefmt.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace tidal {

namespace chr = std::chrono;

std::string format_iso8601_utc(EpochSeconds t) {
    const chr::sys_seconds tp{chr::seconds{t}};
    const auto day = chr::floor<chr::days>(tp);
    const chr::year_month_day ymd{day};
    const chr::hh_mm_ss hms{tp - day};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

namespace {

bool read_int(std::string_view& s, std::size_t digits, int& out) {
    if (s.size() < digits) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + digits, out);
    if (ec != std::errc{} || p != s.data() + digits) return false;
    s.remove_prefix(digits);
    return true;
}

bool eat(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

}  // namespace

std::optional<EpochSeconds> parse_iso8601(std::string_view s) {
    int y, mo, d, h, mi, sec;
    if (!read_int(s, 4, y) || !eat(s, '-') || !read_int(s, 2, mo) || !eat(s, '-') ||
        !read_int(s, 2, d))
        return std::nullopt;
    if (!eat(s, 'T') && !eat(s, ' ')) return std::nullopt;
    if (!read_int(s, 2, h) || !eat(s, ':') || !read_int(s, 2, mi) || !eat(s, ':') ||
        !read_int(s, 2, sec))
        return std::nullopt;
    if (eat(s, '.')) {
        std::size_t n = 0;
        while (n < s.size() && s[n] >= '0' && s[n] <= '9') ++n;
        if (n == 0) return std::nullopt;
        s.remove_prefix(n);
    }
    int offset = 0;
    if (eat(s, 'Z')) {
    } else if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
        const int sign = s.front() == '-' ? -1 : 1;
        s.remove_prefix(1);
        int oh, om;
        if (!read_int(s, 2, oh)) return std::nullopt;
        eat(s, ':');
        if (!read_int(s, 2, om)) return std::nullopt;
        offset = sign * (oh * 3600 + om * 60);
    } else {
        return std::nullopt;
    }
    if (!s.empty()) return std::nullopt;

    const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                  chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    const auto days = chr::sys_days{ymd}.time_since_epoch().count();
    return static_cast<EpochSeconds>(days) * 86400 + h * 3600 + mi * 60 + sec - offset;
}

std::optional<std::int64_t> parse_duration(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::int64_t total = 0;
    while (!s.empty()) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || v < 0) return std::nullopt;
        s.remove_prefix(static_cast<std::size_t>(p - s.data()));
        std::int64_t unit = 1;
        if (!s.empty()) {
            switch (s.front()) {
                case 's': unit = 1; break;
                case 'm': unit = 60; break;
                case 'h': unit = 3600; break;
                case 'd': unit = 86400; break;
                case 'w': unit = 7 * 86400; break;
                default: return std::nullopt;
            }
            s.remove_prefix(1);
        } else if (total != 0) {
            return std::nullopt;  // "1h30" is ambiguous
        }
        total += v * unit;
    }
    return total;
}

EpochSeconds now_epoch() {
    return chr::duration_cast<chr::seconds>(chr::system_clock::now().time_since_epoch()).count();
}

}  // namespace tidal
