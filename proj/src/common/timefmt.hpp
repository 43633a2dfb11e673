#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tidal {

using EpochSeconds = std::int64_t;

// "2024-06-01T08:00:00Z"
std::string format_iso8601_utc(EpochSeconds t);

// Accepts "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM|+HHMM)". Fractions are
// truncated toward the earlier second.
std::optional<EpochSeconds> parse_iso8601(std::string_view text);

// "90", "90s", "15m", "12h", "7d", "1d12h" -> seconds.
std::optional<std::int64_t> parse_duration(std::string_view text);

EpochSeconds now_epoch();

}  // namespace tidal
