#include "story/story.hpp"

#include "common/error.hpp"

#include <algorithm>

namespace tidal {

using nlohmann::json;

std::string_view to_string(MediaKind k) noexcept { return k == MediaKind::Video ? "video" : "image"; }
std::string_view to_string(MediaRole r) noexcept { return r == MediaRole::Poster ? "poster" : "primary"; }
std::string_view to_string(Origin o) noexcept { return o == Origin::Highlight ? "highlight" : "live"; }

std::optional<Origin> origin_from_string(std::string_view s) noexcept {
    if (s == "live") return Origin::Live;
    if (s == "highlight") return Origin::Highlight;
    return std::nullopt;
}

std::size_t best_media_index(std::span<const MediaRef> candidates) {
    if (candidates.empty()) fail(ErrorCode::EmptyCandidates, "no media candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].area() > candidates[best].area()) best = i;
    return best;
}

MediaRef select_best_media(std::span<const MediaRef> candidates) {
    MediaRef out = candidates[best_media_index(candidates)];
    out.best = true;
    return out;
}

const MediaRef& StoryItem::best_media() const {
    for (const auto& m : media)
        if (m.best) return m;
    fail(ErrorCode::Internal, "item " + item_id + " has no best media");
}

const MediaRef* StoryItem::best_poster() const {
    const MediaRef* best = nullptr;
    for (const auto& m : media)
        if (m.role == MediaRole::Poster && (!best || m.area() > best->area())) best = &m;
    return best;
}

void validate(const StoryItem& item) {
    auto bad = [&](const std::string& what) {
        fail(ErrorCode::ParseError, "item " + item.item_id + ": " + what);
    };
    if (item.item_id.empty()) bad("empty item_id");
    if (item.author_id.empty()) bad("empty author_id");
    if (item.taken_at <= 0) bad("taken_at must be positive");
    if (item.expiring_at <= item.taken_at) bad("expiring_at must be after taken_at");
    if ((item.origin == Origin::Highlight) != item.highlight_id.has_value())
        bad("highlight_id must be present exactly for highlight items");
    if (item.media.empty()) bad("no media");
    const auto best = std::count_if(item.media.begin(), item.media.end(),
                                    [](const MediaRef& m) { return m.best; });
    if (best != 1) bad("exactly one media ref must be flagged best");
    for (const auto& m : item.media)
        if (m.width <= 0 || m.height <= 0) bad("media dimensions must be positive");
    if (item.duration_s < 0) bad("negative duration");
    if (item.media_kind == MediaKind::Video && !(item.duration_s > 0)) bad("video without duration");
    for (const auto& s : item.stickers) {
        if (const auto* poll = std::get_if<sticker::Poll>(&s); poll && poll->options.size() < 2)
            bad("poll with fewer than two options");
        if (const auto* tag = std::get_if<sticker::Hashtag>(&s); tag && tag->tag.starts_with('#'))
            bad("hashtag stored with leading '#'");
    }
}

namespace {

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_str(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

json sticker_to_json(const Sticker& s) {
    using namespace sticker;
    return std::visit(
        overloaded{
            [](const Poll& p) {
                json opts = json::array();
                for (const auto& o : p.options)
                    opts.push_back({{"text", o.text}, {"count", o.count ? json(*o.count) : json(nullptr)}});
                return json{{"type", "poll"}, {"question", p.question}, {"options", opts}};
            },
            [](const Question& q) { return json{{"type", "question"}, {"prompt", q.prompt}}; },
            [](const Mention& m) { return json{{"type", "mention"}, {"username", m.username}}; },
            [](const Hashtag& h) { return json{{"type", "hashtag"}, {"tag", h.tag}}; },
            [](const Link& l) { return json{{"type", "link"}, {"url", l.url}, {"title", opt(l.title)}}; },
            [](const Location& l) {
                return json{{"type", "location"}, {"name", l.name}, {"location_id", l.location_id}};
            },
            [](const Slider& s) {
                return json{{"type", "slider"}, {"question", s.question}, {"emoji", s.emoji}};
            },
            [](const Countdown& c) {
                return json{{"type", "countdown"}, {"text", c.text}, {"end_time", c.end_time}};
            },
            [](const Music& m) { return json{{"type", "music"}, {"artist", m.artist}, {"title", m.title}}; },
        },
        s);
}

Sticker sticker_from_json(const json& j) {
    using namespace sticker;
    const auto type = j.at("type").get<std::string>();
    if (type == "poll") {
        Poll p{j.at("question").get<std::string>(), {}};
        for (const auto& o : j.at("options")) {
            PollOption opt{o.at("text").get<std::string>(), std::nullopt};
            if (auto c = o.find("count"); c != o.end() && !c->is_null()) opt.count = c->get<std::int64_t>();
            p.options.push_back(std::move(opt));
        }
        return p;
    }
    if (type == "question") return Question{j.at("prompt").get<std::string>()};
    if (type == "mention") return Mention{j.at("username").get<std::string>()};
    if (type == "hashtag") return Hashtag{j.at("tag").get<std::string>()};
    if (type == "link") return Link{j.at("url").get<std::string>(), opt_str(j, "title")};
    if (type == "location")
        return Location{j.at("name").get<std::string>(), j.at("location_id").get<std::string>()};
    if (type == "slider") return Slider{j.at("question").get<std::string>(), j.at("emoji").get<std::string>()};
    if (type == "countdown")
        return Countdown{j.at("text").get<std::string>(), j.at("end_time").get<EpochSeconds>()};
    if (type == "music") return Music{j.at("artist").get<std::string>(), j.at("title").get<std::string>()};
    fail(ErrorCode::FormatError, "unknown sticker type in snapshot: " + type);
}

json stickers_to_json(const StoryItem& item) {
    json arr = json::array();
    for (const auto& s : item.stickers) arr.push_back(sticker_to_json(s));
    for (const auto& u : item.unknown_stickers)
        arr.push_back({{"type", "unknown"}, {"kind", u.kind}, {"raw", u.raw}});
    return arr;
}

void to_json(json& j, const MediaRef& m) {
    j = json{{"url", m.url}, {"width", m.width}, {"height", m.height},
             {"role", to_string(m.role)}, {"best", m.best}};
}

void from_json(const json& j, MediaRef& m) {
    m.url = j.at("url").get<std::string>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.role = j.at("role").get<std::string>() == "poster" ? MediaRole::Poster : MediaRole::Primary;
    m.best = j.at("best").get<bool>();
}

void to_json(json& j, const StoryItem& it) {
    json stickers = json::array();
    for (const auto& s : it.stickers) stickers.push_back(sticker_to_json(s));
    json unknown = json::array();
    for (const auto& u : it.unknown_stickers) unknown.push_back({{"kind", u.kind}, {"raw", u.raw}});
    j = json{
        {"item_id", it.item_id},
        {"author_id", it.author_id},
        {"author_username", it.author_username},
        {"taken_at", it.taken_at},
        {"expiring_at", it.expiring_at},
        {"media_kind", to_string(it.media_kind)},
        {"media", it.media},
        {"duration_s", it.duration_s},
        {"caption", opt(it.caption)},
        {"stickers", stickers},
        {"unknown_stickers", unknown},
        {"origin", to_string(it.origin)},
        {"highlight_id", opt(it.highlight_id)},
    };
}

void from_json(const json& j, StoryItem& it) {
    it.item_id = j.at("item_id").get<std::string>();
    it.author_id = j.at("author_id").get<std::string>();
    it.author_username = j.at("author_username").get<std::string>();
    it.taken_at = j.at("taken_at").get<EpochSeconds>();
    it.expiring_at = j.at("expiring_at").get<EpochSeconds>();
    it.media_kind = j.at("media_kind").get<std::string>() == "video" ? MediaKind::Video : MediaKind::Image;
    it.media = j.at("media").get<std::vector<MediaRef>>();
    it.duration_s = j.at("duration_s").get<double>();
    it.caption = opt_str(j, "caption");
    it.stickers.clear();
    for (const auto& s : j.at("stickers")) it.stickers.push_back(sticker_from_json(s));
    it.unknown_stickers.clear();
    for (const auto& u : j.at("unknown_stickers"))
        it.unknown_stickers.push_back({u.at("kind").get<std::string>(), u.at("raw")});
    auto origin = origin_from_string(j.at("origin").get<std::string>());
    if (!origin) fail(ErrorCode::FormatError, "bad origin in snapshot");
    it.origin = *origin;
    it.highlight_id = opt_str(j, "highlight_id");
}

void to_json(json& j, const TrayEntry& t) {
    j = json{{"author_id", t.author_id},
             {"author_username", t.author_username},
             {"latest_item_taken_at", t.latest_item_taken_at},
             {"item_count_hint", t.item_count_hint ? json(*t.item_count_hint) : json(nullptr)}};
}

}  // namespace tidal
