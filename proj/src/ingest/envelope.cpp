#include "ingest/envelope.hpp"

#include "common/error.hpp"
#include "common/files.hpp"

namespace tidal {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_absolute_url(std::string_view url) noexcept {
    auto colon = url.find("://");
    if (colon == std::string_view::npos || colon == 0) return false;
    for (std::size_t i = 0; i < colon; ++i) {
        char c = url[i];
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (i > 0 && ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.'));
        if (!ok) return false;
    }
    auto rest = url.substr(colon + 3);
    auto host_end = rest.find_first_of("/?#");
    auto host = rest.substr(0, host_end);
    if (host.empty()) return false;
    for (char c : url)
        if (static_cast<unsigned char>(c) <= 0x20) return false;
    return true;
}

Envelope envelope_from_json(const json& j) {
    auto bad = [](const std::string& what) { fail(ErrorCode::FormatError, "envelope: " + what); };
    if (!j.is_object()) bad("expected a JSON object");
    auto str = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) bad(std::string(key) + " must be a string");
        return it->get<std::string>();
    };
    auto integer = [&](const char* key) -> std::int64_t {
        auto it = j.find(key);
        if (it == j.end() || !it->is_number_integer()) bad(std::string(key) + " must be an integer");
        return it->get<std::int64_t>();
    };

    Envelope env;
    env.envelope_id = str("envelope_id");
    if (!files::is_safe_id(env.envelope_id))
        bad("envelope_id must match [A-Za-z0-9_.:-]{1,128} and not start with '.'");
    env.source_url = str("source_url");
    if (!is_absolute_url(env.source_url)) bad("source_url is not an absolute URL");
    env.method = str("method");
    if (env.method.empty()) bad("method is empty");
    const auto status = integer("status");
    if (status < 100 || status > 599) bad("status out of range");
    env.status = static_cast<int>(status);
    env.captured_at = integer("captured_at");
    if (env.captured_at <= 0) bad("captured_at must be positive");
    env.body = str("body");
    if (auto it = j.find("session_id"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) bad("session_id must be a string or null");
        env.session_id = it->get<std::string>();
        if (!files::is_safe_id(*env.session_id)) bad("session_id contains unsupported characters");
    }
    return env;
}

Envelope envelope_from_json_text(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::FormatError, "envelope: not valid JSON");
    return envelope_from_json(j);
}

std::string envelope_to_json_line(const Envelope& env) {
    ordered_json j;
    j["envelope_id"] = env.envelope_id;
    j["source_url"] = env.source_url;
    j["method"] = env.method;
    j["status"] = env.status;
    j["captured_at"] = env.captured_at;
    j["session_id"] = env.session_id ? ordered_json(*env.session_id) : ordered_json(nullptr);
    j["body"] = env.body;
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace tidal
