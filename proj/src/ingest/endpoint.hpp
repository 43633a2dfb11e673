#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace tidal {

enum class EndpointKind { StoryTray, ReelMedia, Highlight, Unrelated };

std::string_view to_string(EndpointKind k) noexcept;
std::optional<EndpointKind> endpoint_kind_from_string(std::string_view s) noexcept;

// Ordered URL patterns; the first match decides the kind. Patterns must be
// anchored ('^') and the table must cover every kind except Unrelated.
class PatternTable {
public:
    struct Entry {
        std::string pattern;
        EndpointKind kind;
        std::regex re;
    };

    // Throws InvalidPatternTable.
    explicit PatternTable(std::vector<std::pair<std::string, EndpointKind>> patterns);

    static PatternTable defaults();
    // JSON file: {"patterns": [{"pattern": "^https://...", "kind": "ReelMedia"}, ...]}
    static PatternTable load(const std::filesystem::path& path);
    static PatternTable from_json_text(std::string_view text);

    const std::vector<Entry>& entries() const noexcept { return entries_; }

private:
    std::vector<Entry> entries_;
};

// Total: unmatched (or empty) URLs are Unrelated.
EndpointKind classify_endpoint(std::string_view url, const PatternTable& table);

}  // namespace tidal
