#pragma once

#include "story/story.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tidal {

enum class AssetStatus { Pending, Fetched, Failed };

std::string_view to_string(AssetStatus s) noexcept;

struct MediaAsset {
    std::string item_id;
    std::string url;
    int ordinal = 0;  // k in media/<item_id>_<k>.<ext>
    MediaRole role = MediaRole::Primary;
    AssetStatus status = AssetStatus::Pending;
    std::string local_path;    // relative to the archive root, set once fetched
    std::string content_hash;  // sha256 hex
    std::uint64_t bytes = 0;
    EpochSeconds fetched_at = 0;
    int attempts = 0;
    std::string last_error;

    bool operator==(const MediaAsset&) const = default;
};

struct AssetRequest {
    std::string url;
    MediaRole role;
};

// What gets downloaded for an item: its best Primary ref, plus the largest
// Poster ref for videos.
std::vector<AssetRequest> plan_assets(const StoryItem& item);

// jpg, png, mp4, webp; anything else is "bin". Parameters (";charset=") are ignored.
std::string extension_for_content_type(std::string_view content_type);

}  // namespace tidal
