#include "ingest/endpoint.hpp"

#include "common/error.hpp"
#include "common/files.hpp"

#include <json.hpp>

namespace tidal {

std::string_view to_string(EndpointKind k) noexcept {
    switch (k) {
        case EndpointKind::StoryTray: return "StoryTray";
        case EndpointKind::ReelMedia: return "ReelMedia";
        case EndpointKind::Highlight: return "Highlight";
        case EndpointKind::Unrelated: return "Unrelated";
    }
    return "Unrelated";
}

std::optional<EndpointKind> endpoint_kind_from_string(std::string_view s) noexcept {
    for (auto k : {EndpointKind::StoryTray, EndpointKind::ReelMedia, EndpointKind::Highlight,
                   EndpointKind::Unrelated})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

PatternTable::PatternTable(std::vector<std::pair<std::string, EndpointKind>> patterns) {
    bool seen[3] = {false, false, false};
    for (auto& [pattern, kind] : patterns) {
        if (pattern.empty() || pattern.front() != '^')
            fail(ErrorCode::InvalidPatternTable, "pattern is not anchored with '^': " + pattern);
        std::regex re;
        try {
            re = std::regex(pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
            fail(ErrorCode::InvalidPatternTable, "bad pattern " + pattern + ": " + e.what());
        }
        if (kind != EndpointKind::Unrelated) seen[static_cast<int>(kind)] = true;
        entries_.push_back({std::move(pattern), kind, std::move(re)});
    }
    for (auto k : {EndpointKind::StoryTray, EndpointKind::ReelMedia, EndpointKind::Highlight})
        if (!seen[static_cast<int>(k)])
            fail(ErrorCode::InvalidPatternTable,
                 "pattern table has no entry for " + std::string(to_string(k)));
}

PatternTable PatternTable::defaults() {
    return PatternTable({
        {"^https://[^/]+/api/v1/feed/reels_tray/", EndpointKind::StoryTray},
        {"^https://[^/]+/api/v1/feed/reels_media/", EndpointKind::ReelMedia},
        {"^https://[^/]+/api/v1/highlights/.*", EndpointKind::Highlight},
    });
}

PatternTable PatternTable::from_json_text(std::string_view text) {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("patterns") || !doc["patterns"].is_array())
        fail(ErrorCode::InvalidPatternTable, "pattern table must be an object with a \"patterns\" array");
    std::vector<std::pair<std::string, EndpointKind>> entries;
    for (const auto& e : doc["patterns"]) {
        if (!e.is_object() || !e.contains("pattern") || !e.contains("kind") || !e["pattern"].is_string() ||
            !e["kind"].is_string())
            fail(ErrorCode::InvalidPatternTable, "pattern entries need string \"pattern\" and \"kind\"");
        auto kind = endpoint_kind_from_string(e["kind"].get<std::string>());
        if (!kind) fail(ErrorCode::InvalidPatternTable, "unknown kind " + e["kind"].get<std::string>());
        entries.emplace_back(e["pattern"].get<std::string>(), *kind);
    }
    return PatternTable(std::move(entries));
}

PatternTable PatternTable::load(const std::filesystem::path& path) {
    return from_json_text(files::read_all(path));
}

EndpointKind classify_endpoint(std::string_view url, const PatternTable& table) {
    for (const auto& e : table.entries())
        if (std::regex_search(url.begin(), url.end(), e.re, std::regex_constants::match_continuous))
            return e.kind;
    return EndpointKind::Unrelated;
}

}  // namespace tidal
