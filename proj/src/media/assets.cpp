#include "media/assets.hpp"

#include <algorithm>
#include <cctype>

namespace tidal {

std::string_view to_string(AssetStatus s) noexcept {
    switch (s) {
        case AssetStatus::Pending: return "pending";
        case AssetStatus::Fetched: return "fetched";
        case AssetStatus::Failed: return "failed";
    }
    return "pending";
}

std::vector<AssetRequest> plan_assets(const StoryItem& item) {
    std::vector<AssetRequest> out;
    out.push_back({item.best_media().url, MediaRole::Primary});
    if (item.media_kind == MediaKind::Video)
        if (const auto* poster = item.best_poster()) out.push_back({poster->url, MediaRole::Poster});
    return out;
}

std::string extension_for_content_type(std::string_view ct) {
    auto semi = ct.find(';');
    if (semi != std::string_view::npos) ct = ct.substr(0, semi);
    std::string t;
    for (char c : ct)
        if (!std::isspace(static_cast<unsigned char>(c)))
            t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "image/jpeg" || t == "image/jpg" || t == "image/pjpeg") return "jpg";
    if (t == "image/png") return "png";
    if (t == "video/mp4") return "mp4";
    if (t == "image/webp") return "webp";
    return "bin";
}

}  // namespace tidal
