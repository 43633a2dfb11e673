#pragma once

#include "common/timefmt.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tidal {

enum class MediaKind { Image, Video };
enum class MediaRole { Primary, Poster };
enum class Origin { Live, Highlight };

std::string_view to_string(MediaKind k) noexcept;
std::string_view to_string(MediaRole r) noexcept;
std::string_view to_string(Origin o) noexcept;
std::optional<Origin> origin_from_string(std::string_view s) noexcept;

struct MediaRef {
    std::string url;
    int width = 0;
    int height = 0;
    MediaRole role = MediaRole::Primary;
    bool best = false;

    std::int64_t area() const noexcept { return std::int64_t{width} * height; }
    bool operator==(const MediaRef&) const = default;
};

namespace sticker {

struct PollOption {
    std::string text;
    std::optional<std::int64_t> count;  // absent until votes are visible
    bool operator==(const PollOption&) const = default;
};
struct Poll {
    std::string question;
    std::vector<PollOption> options;  // at least two
    bool operator==(const Poll&) const = default;
};
struct Question {
    std::string prompt;
    bool operator==(const Question&) const = default;
};
struct Mention {
    std::string username;
    bool operator==(const Mention&) const = default;
};
struct Hashtag {
    std::string tag;  // stored without the leading '#'
    bool operator==(const Hashtag&) const = default;
};
struct Link {
    std::string url;
    std::optional<std::string> title;
    bool operator==(const Link&) const = default;
};
struct Location {
    std::string name;
    std::string location_id;
    bool operator==(const Location&) const = default;
};
struct Slider {
    std::string question;
    std::string emoji;
    bool operator==(const Slider&) const = default;
};
struct Countdown {
    std::string text;
    EpochSeconds end_time = 0;
    bool operator==(const Countdown&) const = default;
};
struct Music {
    std::string artist;
    std::string title;
    bool operator==(const Music&) const = default;
};

}  // namespace sticker

using Sticker = std::variant<sticker::Poll, sticker::Question, sticker::Mention, sticker::Hashtag,
                             sticker::Link, sticker::Location, sticker::Slider,
                             sticker::Countdown, sticker::Music>;

// Sticker arrays of a kind this build does not understand, kept verbatim.
struct UnknownSticker {
    std::string kind;  // the payload key it came from, e.g. "story_quizs"
    nlohmann::json raw;
    bool operator==(const UnknownSticker&) const = default;
};

struct StoryItem {
    std::string item_id;
    std::string author_id;
    std::string author_username;
    EpochSeconds taken_at = 0;
    EpochSeconds expiring_at = 0;
    MediaKind media_kind = MediaKind::Image;
    std::vector<MediaRef> media;
    double duration_s = 0.0;
    std::optional<std::string> caption;
    std::vector<Sticker> stickers;
    std::vector<UnknownSticker> unknown_stickers;
    Origin origin = Origin::Live;
    std::optional<std::string> highlight_id;

    const MediaRef& best_media() const;
    // Largest Poster candidate, if any.
    const MediaRef* best_poster() const;
    std::size_t sticker_count() const noexcept { return stickers.size() + unknown_stickers.size(); }

    bool operator==(const StoryItem&) const = default;
};

struct TrayEntry {
    std::string author_id;
    std::string author_username;
    EpochSeconds latest_item_taken_at = 0;
    std::optional<std::int64_t> item_count_hint;
    bool operator==(const TrayEntry&) const = default;
};

// Default live window of a story.
inline constexpr EpochSeconds kStoryLifetimeSeconds = 86400;

// Argmax by width*height, first occurrence wins ties. The returned copy has
// best=true. Throws EmptyCandidates.
MediaRef select_best_media(std::span<const MediaRef> candidates);
std::size_t best_media_index(std::span<const MediaRef> candidates);

// Checks every StoryItem invariant; throws ParseError naming the violation.
void validate(const StoryItem& item);

nlohmann::json sticker_to_json(const Sticker& s);
Sticker sticker_from_json(const nlohmann::json& j);

// Complete sticker list (known stickers, then unknown kinds) as one JSON array.
nlohmann::json stickers_to_json(const StoryItem& item);

// Snapshot encoding used in the archive's observation log.
void to_json(nlohmann::json& j, const StoryItem& item);
void from_json(const nlohmann::json& j, StoryItem& item);
void to_json(nlohmann::json& j, const MediaRef& m);
void from_json(const nlohmann::json& j, MediaRef& m);
void to_json(nlohmann::json& j, const TrayEntry& t);

}  // namespace tidal
