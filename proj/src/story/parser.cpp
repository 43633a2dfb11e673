#include "story/parser.hpp"

#include "common/error.hpp"
#include "common/files.hpp"

#include <array>
#include <functional>

namespace tidal {

using nlohmann::json;

namespace {

// A JSON node plus the path that reached it, so every failure can say where.
class Cursor {
public:
    Cursor(const json& node, std::string path) : node_(&node), path_(std::move(path)) {}

    const json& node() const { return *node_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void error(const std::string& what) const {
        fail(ErrorCode::ParseError, (path_.empty() ? std::string("$") : path_) + ": " + what);
    }

    Cursor object_member(std::string_view key) const {
        auto c = find(key);
        if (!c) Cursor(*node_, child_path(key)).error("missing");
        return *c;
    }

    // Member lookup; absent or null yields nullopt.
    std::optional<Cursor> find(std::string_view key) const {
        expect_object();
        auto it = node_->find(key);
        if (it == node_->end() || it->is_null()) return std::nullopt;
        return Cursor(*it, child_path(key));
    }

    void expect_object() const {
        if (!node_->is_object()) error("expected object");
    }

    void for_each(const std::function<void(const Cursor&)>& fn) const {
        if (!node_->is_array()) error("expected array");
        for (std::size_t i = 0; i < node_->size(); ++i)
            fn(Cursor((*node_)[i], path_ + "[" + std::to_string(i) + "]"));
    }

    std::string str() const {
        if (!node_->is_string()) error("expected string");
        return node_->get<std::string>();
    }

    // Platform keys arrive as strings or as (64-bit) integers.
    std::string id() const {
        if (node_->is_string()) {
            auto s = node_->get<std::string>();
            if (s.empty()) error("empty identifier");
            return s;
        }
        if (node_->is_number_unsigned()) return std::to_string(node_->get<std::uint64_t>());
        if (node_->is_number_integer()) return std::to_string(node_->get<std::int64_t>());
        error("expected identifier (string or integer)");
    }

    std::int64_t integer() const {
        if (!node_->is_number_integer()) error("expected integer");
        return node_->get<std::int64_t>();
    }

    double number() const {
        if (!node_->is_number()) error("expected number");
        return node_->get<double>();
    }

private:
    std::string child_path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json* node_;
    std::string path_;
};

json parse_document(std::string_view body) {
    json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) fail(ErrorCode::ParseError, "$: payload is not a well-formed JSON document");
    if (!doc.is_object()) fail(ErrorCode::ParseError, "$: expected object");
    return doc;
}

struct Author {
    std::string id;
    std::string username;
};

Author parse_user(const Cursor& user) {
    return {user.object_member("pk").id(), user.object_member("username").str()};
}

std::vector<MediaRef> parse_candidates(const Cursor& arr, MediaRole role) {
    std::vector<MediaRef> out;
    arr.for_each([&](const Cursor& c) {
        MediaRef m;
        auto url = c.object_member("url");
        m.url = url.str();
        if (!m.url.starts_with("https://") && !m.url.starts_with("http://"))
            url.error("expected absolute http(s) URL");
        auto w = c.object_member("width");
        auto h = c.object_member("height");
        m.width = static_cast<int>(w.integer());
        m.height = static_cast<int>(h.integer());
        if (m.width <= 0) w.error("must be positive");
        if (m.height <= 0) h.error("must be positive");
        m.role = role;
        out.push_back(std::move(m));
    });
    return out;
}

constexpr std::array<std::string_view, 9> kStickerKeys = {
    "story_polls",     "story_questions", "reel_mentions",    "story_hashtags",       "story_link_stickers",
    "story_locations", "story_sliders",   "story_countdowns", "story_music_stickers",
};

Sticker parse_sticker(std::string_view key, const Cursor& c) {
    using namespace sticker;
    if (key == "story_polls") {
        auto p = c.object_member("poll_sticker");
        Poll poll{p.object_member("question").str(), {}};
        auto tallies = p.object_member("tallies");
        tallies.for_each([&](const Cursor& t) {
            PollOption o{t.object_member("text").str(), std::nullopt};
            if (auto n = t.find("count")) o.count = n->integer();
            poll.options.push_back(std::move(o));
        });
        if (poll.options.size() < 2) tallies.error("poll needs at least two options");
        return poll;
    }
    if (key == "story_questions")
        return Question{c.object_member("question_sticker").object_member("question").str()};
    if (key == "reel_mentions")
        return Mention{c.object_member("user").object_member("username").str()};
    if (key == "story_hashtags") {
        auto name = c.object_member("hashtag").object_member("name");
        auto tag = name.str();
        while (tag.starts_with('#')) tag.erase(0, 1);
        if (tag.empty()) name.error("empty hashtag");
        return Hashtag{std::move(tag)};
    }
    if (key == "story_link_stickers") {
        auto l = c.object_member("story_link");
        Link link{l.object_member("url").str(), std::nullopt};
        if (auto t = l.find("link_title")) link.title = t->str();
        return link;
    }
    if (key == "story_locations") {
        auto l = c.object_member("location");
        return Location{l.object_member("name").str(), l.object_member("pk").id()};
    }
    if (key == "story_sliders") {
        auto s = c.object_member("slider_sticker");
        return Slider{s.object_member("question").str(), s.object_member("emoji").str()};
    }
    if (key == "story_countdowns") {
        auto s = c.object_member("countdown_sticker");
        return Countdown{s.object_member("text").str(), s.object_member("end_ts").integer()};
    }
    auto m = c.object_member("music_asset_info");
    return Music{m.object_member("display_artist").str(), m.object_member("title").str()};
}

bool is_known_sticker_key(std::string_view key) {
    for (auto k : kStickerKeys)
        if (k == key) return true;
    return false;
}

StoryItem parse_item(const Cursor& c, const Author& author, Origin origin,
                     const std::optional<std::string>& highlight_id) {
    c.expect_object();
    StoryItem item;
    auto pk = c.object_member("pk");
    item.item_id = pk.id();
    if (!files::is_safe_id(item.item_id) || item.item_id.find(':') != std::string::npos)
        pk.error("item key contains unsupported characters");
    item.author_id = author.id;
    item.author_username = author.username;
    item.origin = origin;
    item.highlight_id = highlight_id;

    auto taken = c.object_member("taken_at");
    item.taken_at = taken.integer();
    if (item.taken_at <= 0) taken.error("must be positive");
    if (auto exp = c.find("expiring_at")) {
        item.expiring_at = exp->integer();
        if (item.expiring_at <= item.taken_at) exp->error("must be after taken_at");
    } else {
        item.expiring_at = item.taken_at + kStoryLifetimeSeconds;
    }

    if (auto cap = c.find("caption")) {
        if (cap->node().is_string())
            item.caption = cap->str();
        else if (auto text = cap->find("text"))
            item.caption = text->str();
    }

    auto type = c.object_member("media_type");
    const auto media_type = type.integer();
    std::vector<MediaRef> images;
    if (auto iv = c.find("image_versions2"))
        if (auto cands = iv->find("candidates")) images = parse_candidates(*cands, MediaRole::Primary);

    if (media_type == 1) {
        item.media_kind = MediaKind::Image;
        if (images.empty()) c.error("image item without image candidates");
        item.media = std::move(images);
    } else if (media_type == 2) {
        item.media_kind = MediaKind::Video;
        auto vv = c.find("video_versions");
        if (!vv) c.error("video item without video_versions");
        item.media = parse_candidates(*vv, MediaRole::Primary);
        if (item.media.empty()) vv->error("video item without video candidates");
        for (auto& p : images) {
            p.role = MediaRole::Poster;
            item.media.push_back(std::move(p));
        }
        auto dur = c.find("video_duration");
        if (!dur) c.error("video item without video_duration");
        item.duration_s = dur->number();
        if (!(item.duration_s > 0)) dur->error("must be positive");
    } else {
        type.error("unsupported media_type " + std::to_string(media_type));
    }

    std::size_t primaries = 0;
    while (primaries < item.media.size() && item.media[primaries].role == MediaRole::Primary) ++primaries;
    item.media[best_media_index(std::span(item.media).first(primaries))].best = true;

    for (auto key : kStickerKeys) {
        auto arr = c.find(key);
        if (!arr) continue;
        arr->for_each([&](const Cursor& s) { item.stickers.push_back(parse_sticker(key, s)); });
    }
    for (const auto& [key, value] : c.node().items()) {
        if (!key.starts_with("story_") || is_known_sticker_key(key) || !value.is_array()) continue;
        for (const auto& raw : value) item.unknown_stickers.push_back({key, raw});
    }

    try {
        validate(item);
    } catch (const Error& e) {
        c.error(e.what());
    }
    return item;
}

template <class Fn>
void for_each_reel(const Cursor& root, Fn&& fn) {
    if (auto arr = root.find("reels_media")) {
        arr->for_each(fn);
        return;
    }
    // Older responses key reels by user id instead of listing them.
    if (auto obj = root.find("reels")) {
        obj->expect_object();
        for (const auto& [key, value] : obj->node().items()) fn(Cursor(value, obj->path() + "." + key));
        return;
    }
    root.error("missing reels_media");
}

}  // namespace

std::span<const std::string_view> known_sticker_keys() noexcept { return kStickerKeys; }

std::vector<StoryItem> parse_reel_payload(std::string_view body, EpochSeconds captured_at) {
    const json doc = parse_document(body);
    Cursor root(doc, "");
    std::vector<StoryItem> out;
    for_each_reel(root, [&](const Cursor& reel) {
        reel.expect_object();
        const Author author = parse_user(reel.object_member("user"));
        auto items = reel.find("items");
        if (!items) return;
        items->for_each([&](const Cursor& c) {
            auto item = parse_item(c, author, Origin::Live, std::nullopt);
            if (item.taken_at > captured_at)
                c.object_member("taken_at").error("live item taken after capture time");
            out.push_back(std::move(item));
        });
    });
    return out;
}

std::vector<StoryItem> parse_highlight_payload(std::string_view body, EpochSeconds /*captured_at*/) {
    const json doc = parse_document(body);
    Cursor root(doc, "");
    std::vector<StoryItem> out;
    root.object_member("highlights").for_each([&](const Cursor& hl) {
        hl.expect_object();
        auto id = hl.object_member("id");
        std::string highlight_id = id.id();
        if (!files::is_safe_id(highlight_id)) id.error("highlight id contains unsupported characters");
        const Author author = parse_user(hl.object_member("user"));
        auto items = hl.find("items");
        if (!items) return;
        items->for_each([&](const Cursor& c) {
            out.push_back(parse_item(c, author, Origin::Highlight, highlight_id));
        });
    });
    return out;
}

std::vector<TrayEntry> parse_tray_payload(std::string_view body) {
    const json doc = parse_document(body);
    Cursor root(doc, "");
    std::vector<TrayEntry> out;
    root.object_member("tray").for_each([&](const Cursor& c) {
        c.expect_object();
        const Author author = parse_user(c.object_member("user"));
        TrayEntry e{author.id, author.username, 0, std::nullopt};
        if (auto latest = c.find("latest_reel_media")) e.latest_item_taken_at = latest->integer();
        if (auto n = c.find("media_count")) e.item_count_hint = n->integer();
        out.push_back(std::move(e));
    });
    return out;
}

}  // namespace tidal
