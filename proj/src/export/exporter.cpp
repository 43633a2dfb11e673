#include "export/exporter.hpp"

#include "common/error.hpp"
#include "export/csv.hpp"

#include <array>
#include <charconv>
#include <unordered_map>

namespace tidal {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 21> kColumns = {
    "item_id",         "author_id",       "author_username", "taken_at_iso8601", "expiring_at_iso8601",
    "media_kind",      "media_local_path", "media_url",      "width",            "height",
    "duration_s",      "origin",          "highlight_id",    "caption",          "sticker_count",
    "poll_question",   "poll_options",    "mention_usernames", "hashtags",        "link_url",
    "stickers_json",
};

constexpr std::array<std::string_view, 3> kNameColumns = {"author_username", "mention_usernames", "stickers_json"};

std::string format_decimal(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, p) : std::to_string(v);
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ';';
        out += parts[i];
    }
    return out;
}

}  // namespace

std::span<const std::string_view> export_columns() noexcept { return kColumns; }
std::span<const std::string_view> name_bearing_columns() noexcept { return kNameColumns; }

std::size_t export_csv(const Archive& archive, const ExportConfig& config, std::ostream& out) {
    if (config.pseudonymize && !config.key)
        fail(ErrorCode::MissingKey, "pseudonymized export requested but no pseudonym key is configured");

    auto name = [&](const std::string& username) {
        return config.pseudonymize ? pseudonymize_username(username, *config.key) : username;
    };

    const CanonicalSnapshot snap = archive.canonical_snapshot();
    std::unordered_map<std::string, std::string> fetched_paths;  // item_id \x1f url -> local path
    for (const auto& a : snap.assets)
        if (a.status == AssetStatus::Fetched) fetched_paths[a.item_id + '\x1f' + a.url] = a.local_path;

    const std::vector<std::string> header(kColumns.begin(), kColumns.end());
    csv::write_record(out, header);

    std::size_t rows = 0;
    for (const auto& item : snap.items) {
        const MediaRef& best = item.best_media();
        std::string poll_question, poll_options, link_url;
        bool have_poll = false, have_link = false;
        std::vector<std::string> mentions, hashtags;
        json stickers = json::array();
        for (const auto& s : item.stickers) {
            Sticker shown = s;
            if (auto* m = std::get_if<sticker::Mention>(&shown)) {
                m->username = name(m->username);
                mentions.push_back(m->username);
            } else if (auto* p = std::get_if<sticker::Poll>(&s); p && !have_poll) {
                have_poll = true;
                poll_question = p->question;
                std::vector<std::string> opts;
                for (const auto& o : p->options) opts.push_back(o.text);
                poll_options = join(opts);
            } else if (auto* h = std::get_if<sticker::Hashtag>(&s)) {
                hashtags.push_back(h->tag);
            } else if (auto* l = std::get_if<sticker::Link>(&s); l && !have_link) {
                have_link = true;
                link_url = l->url;
            }
            stickers.push_back(sticker_to_json(shown));
        }
        for (const auto& u : item.unknown_stickers)
            stickers.push_back({{"type", "unknown"}, {"kind", u.kind}, {"raw", u.raw}});

        auto path_it = fetched_paths.find(item.item_id + '\x1f' + best.url);
        const std::vector<std::string> row = {
            item.item_id,
            item.author_id,
            name(item.author_username),
            format_iso8601_utc(item.taken_at),
            format_iso8601_utc(item.expiring_at),
            std::string(to_string(item.media_kind)),
            path_it == fetched_paths.end() ? std::string() : path_it->second,
            best.url,
            std::to_string(best.width),
            std::to_string(best.height),
            format_decimal(item.duration_s),
            std::string(to_string(item.origin)),
            item.highlight_id.value_or(""),
            item.caption.value_or(""),
            std::to_string(item.sticker_count()),
            poll_question,
            poll_options,
            join(mentions),
            join(hashtags),
            link_url,
            stickers.dump(-1, ' ', false, json::error_handler_t::replace),
        };
        csv::write_record(out, row);
        ++rows;
    }
    out.flush();
    if (!out) fail(ErrorCode::IoError, "failed writing CSV export");
    return rows;
}

}  // namespace tidal
