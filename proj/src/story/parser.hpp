#pragma once

#include "story/story.hpp"

#include <string_view>
#include <vector>

namespace tidal {

// Parsers for "story payload schema v1" (docs/payload-schema.md). All are pure;
// errors are ParseError with the path of the first offending node, e.g.
// "reels_media[0].items[2].taken_at: expected integer".

// Items from a reel-media response. Every item is Origin::Live. A Live item
// whose taken_at lies after `captured_at` is rejected.
std::vector<StoryItem> parse_reel_payload(std::string_view body, EpochSeconds captured_at);

// Items from a highlight response; origin=Highlight, highlight_id set. Items
// may be long expired relative to `captured_at`.
std::vector<StoryItem> parse_highlight_payload(std::string_view body, EpochSeconds captured_at);

// Accounts announced in a story-tray response.
std::vector<TrayEntry> parse_tray_payload(std::string_view body);

// Sticker payload keys understood by the parser, in extraction order.
std::span<const std::string_view> known_sticker_keys() noexcept;

}  // namespace tidal
