#pragma once

#include "common/timefmt.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace tidal {

// One intercepted HTTP response plus capture metadata.
struct Envelope {
    std::string envelope_id;
    std::string source_url;
    std::string method = "GET";
    int status = 200;
    EpochSeconds captured_at = 0;
    std::string body;
    std::optional<std::string> session_id;

    bool operator==(const Envelope&) const = default;
};

// Decodes one NDJSON line / request body. Throws FormatError naming the
// first invalid field; checks every Envelope invariant.
Envelope envelope_from_json_text(std::string_view text);
Envelope envelope_from_json(const nlohmann::json& j);

// Canonical single-line encoding (field order as documented).
std::string envelope_to_json_line(const Envelope& env);

bool is_absolute_url(std::string_view url) noexcept;

}  // namespace tidal
