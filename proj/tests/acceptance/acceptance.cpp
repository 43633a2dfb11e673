// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   tidal_acceptance <path-to-tidal-cli>

#include "common/error.hpp"
#include "csv_reader.hpp"
#include "export/exporter.hpp"
#include "fixture_server.hpp"
#include "ingest/ingest.hpp"
#include "media/fetcher.hpp"
#include "service/server.hpp"
#include "story/parser.hpp"
#include "support.hpp"
#include "tide/scheduler.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace tidal;
using tidal::test::expected_counts;
using tidal::test::fixture;
using tidal::test::fixture_text;
using tidal::test::TempDir;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Thrown by expect(); the message becomes the FAIL detail.
struct Unmet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Unmet(what);
}

template <class A, class B>
void expect_eq(const A& got, const B& want, const std::string& what) {
    if (!(got == want)) {
        std::ostringstream os;
        os << what << ": got " << got << ", want " << want;
        throw Unmet(os.str());
    }
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        if (nl > pos) out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus: reel envelopes shaped like the shipped fixture, with
// fresh item ids, authors and timestamps.

constexpr EpochSeconds kBase = 1717243200;

std::string synthetic_ndjson(std::size_t items, std::size_t per_envelope, std::size_t authors = 46,
                             const std::string& tag = "syn", std::uint64_t first_pk = 9100000000000000000ULL) {
    const json fx = json::parse(fixture_text("fx_reels_3users.json"));
    const json item_template = fx.at("reels_media").at(0).at("items").at(0);
    std::string out;
    std::size_t next = 0, env_no = 0;
    while (next < items) {
        const EpochSeconds captured = kBase + static_cast<EpochSeconds>(env_no) * 60;
        json groups = json::array();
        std::map<std::size_t, std::size_t> group_of_author;
        for (std::size_t k = 0; k < per_envelope && next < items; ++k, ++next) {
            const std::size_t author = next % authors;
            if (!group_of_author.count(author)) {
                group_of_author[author] = groups.size();
                const std::string id = std::to_string(50000 + author);
                groups.push_back({{"id", id},
                                  {"user", {{"pk", id}, {"username", "synthetic_user_" + std::to_string(author)}}},
                                  {"items", json::array()}});
            }
            json it = item_template;
            it["pk"] = std::to_string(first_pk + next);
            it["taken_at"] = captured - 3600 - static_cast<EpochSeconds>(next % 600);
            it["expiring_at"] = it["taken_at"].get<EpochSeconds>() + kStoryLifetimeSeconds;
            it["caption"] = {{"text", "synthetic item " + std::to_string(next) + ", with \"quotes\""}};
            groups[group_of_author[author]]["items"].push_back(std::move(it));
        }
        json body = fx;
        body["reels_media"] = groups;
        json env = {{"envelope_id", tag + "-" + std::to_string(env_no)},
                    {"source_url", "https://i.example-api.test/api/v1/feed/reels_media/?reel_ids=1"},
                    {"method", "GET"},
                    {"status", 200},
                    {"captured_at", captured},
                    {"session_id", nullptr},
                    {"body", body.dump()}};
        out += env.dump() + "\n";
        ++env_no;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::map<std::string, int> sticker_tally(const std::vector<StoryItem>& items) {
    std::map<std::string, int> t;
    for (const auto& it : items) {
        for (const auto& s : it.stickers) ++t[sticker_to_json(s).at("type").get<std::string>()];
        t["unknown_stickers"] += static_cast<int>(it.unknown_stickers.size());
    }
    return t;
}

void expect_matches_oracle(const std::string& name, const std::vector<StoryItem>& items) {
    const json& want = expected_counts().at(name);
    expect_eq(items.size(), want.at("items").get<std::size_t>(), name + " items");
    std::vector<std::string> ids;
    std::size_t videos = 0, nodes = 0;
    for (const auto& it : items) {
        ids.push_back(it.item_id);
        if (it.media_kind == MediaKind::Video) ++videos;
        nodes += it.sticker_count();
    }
    expect(ids == want.at("item_ids").get<std::vector<std::string>>(), name + " item ids differ");
    expect_eq(videos, want.at("videos").get<std::size_t>(), name + " videos");
    expect_eq(nodes, want.at("sticker_nodes").get<std::size_t>(), name + " sticker nodes");
    const auto tally = sticker_tally(items);
    for (const char* kind : {"poll", "question", "mention", "hashtag", "link", "location", "slider", "countdown",
                             "music", "unknown_stickers"}) {
        auto it = tally.find(kind);
        expect_eq(it == tally.end() ? 0 : it->second, want.at(kind).get<int>(), name + " " + kind);
    }
}

std::string fixture_parse_exactness() {
    const auto t0 = Clock::now();
    const auto reels = parse_reel_payload(fixture_text("fx_reels_3users.json"), kBase);
    expect_matches_oracle("fx_reels_3users.json", reels);
    const auto tally = sticker_tally(reels);
    expect(reels.size() == 7 && tally.at("poll") == 1 && tally.at("mention") >= 1 && tally.at("hashtag") >= 1,
           "reels fixture headline counts");
    expect_matches_oracle("fx_video_item.json", parse_reel_payload(fixture_text("fx_video_item.json"), kBase));
    expect_matches_oracle("fx_highlight_tray.json",
                          parse_highlight_payload(fixture_text("fx_highlight_tray.json"), kBase));
    expect_eq(parse_tray_payload(fixture_text("fx_tray.json")).size(),
              expected_counts().at("fx_tray.json").at("entries").get<std::size_t>(), "tray entries");

    TempDir dir("acc");
    auto a = Archive::open(dir.path());
    const auto s = ingest_ndjson(fixture("fx_stream.ndjson"), PatternTable::defaults(), *a);
    const json& want = expected_counts().at("fx_stream.ndjson");
    expect_eq(s.envelopes, want.at("envelopes").get<std::size_t>(), "stream envelopes");
    expect_eq(s.parsed, want.at("parsed").get<std::size_t>(), "stream parsed");
    expect_eq(a->stats().items, want.at("distinct_items").get<std::size_t>(), "stream distinct items");
    const double secs = seconds_since(t0);
    expect(secs < 1.0, "took " + std::to_string(secs) + " s");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f s", secs);
    return buf;
}

std::string dedup_idempotence() {
    TempDir dir("acc");
    auto a = Archive::open(dir.path());
    const auto table = PatternTable::defaults();
    const auto lines = lines_of(fixture_text("fx_stream.ndjson"));
    for (const auto& l : lines) ingest_envelope(envelope_from_json_text(l), table, *a);
    const auto items = a->stats().items;
    std::size_t second_new = 0;
    for (const auto& l : lines) second_new += ingest_envelope(envelope_from_json_text(l), table, *a).items_new;
    expect_eq(second_new, std::size_t{0}, "items_new in second pass");
    expect_eq(a->stats().items, items, "item count after replay");
    return std::to_string(items) + " items, second pass items_new=0";
}

std::string coverage_mathematics() {
    const auto t0 = Clock::now();
    constexpr std::int64_t L = 86400;
    struct Regime {
        std::int64_t interval;
        std::function<void(const CoverageReport&)> check;
    };
    const std::vector<Regime> regimes = {
        {43200,
         [](const CoverageReport& r) {
             expect(r.min_observations == 2 && r.max_observations == 2 && r.single_miss_safe, "12h regime");
         }},
        {86400, [](const CoverageReport& r) { expect(r.min_observations == 1 && r.margin_s == 0, "24h regime"); }},
        {90000, [](const CoverageReport& r) { expect(r.min_observations == 0, "25h regime"); }},
    };
    std::string detail;
    for (const auto& reg : regimes) {
        const auto plan = plan_sessions(0, reg.interval, 30 * 86400);
        const auto report = coverage_report(plan, L);
        reg.check(report);
        // Brute force over one full period of posting seconds, well inside the plan.
        const EpochSeconds start = 10 * 86400;
        std::int64_t lo = INT64_MAX, hi = INT64_MIN;
        for (EpochSeconds p = start; p < start + reg.interval; ++p) {
            std::int64_t n = 0;
            for (const auto t : plan.sessions)
                if (t >= p && t < p + L) ++n;
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        expect_eq(report.min_observations, lo, "min vs brute force at interval " + std::to_string(reg.interval));
        expect_eq(report.max_observations, hi, "max vs brute force at interval " + std::to_string(reg.interval));
        detail += std::to_string(reg.interval / 3600) + "h:" + std::to_string(lo) + "-" + std::to_string(hi) + " ";
    }
    const double secs = seconds_since(t0);
    expect(secs < 10.0, "took " + std::to_string(secs) + " s");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f s", secs);
    return detail + buf;
}

std::string desk_scale_throughput() {
    constexpr std::size_t kItems = 2208;
    const auto text = synthetic_ndjson(kItems, 8);
    TempDir dir("acc");
    auto a = Archive::open(dir.path());  // durable: fdatasync on every append

    const auto t0 = Clock::now();
    const auto s = ingest_ndjson_text(text, PatternTable::defaults(), *a);
    const double ingest_s = seconds_since(t0);
    expect_eq(s.new_items, kItems, "new items");
    expect_eq(a->stats().items, kItems, "archived items");

    const auto t1 = Clock::now();
    std::ofstream out(dir / "export.csv", std::ios::binary);
    const auto rows = export_csv(*a, {}, out);
    out.close();
    const double export_s = seconds_since(t1);
    expect_eq(rows, kItems, "exported rows");
    expect(ingest_s < 10.0, "ingest took " + std::to_string(ingest_s) + " s");
    expect(export_s < 2.0, "export took " + std::to_string(export_s) + " s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu items: ingest %.3f s, export %.3f s", kItems, ingest_s, export_s);
    return buf;
}

std::string media_integrity() {
    TempDir dir("acc");
    tidal::test::FixtureServer srv;
    auto a = Archive::open(dir.path());
    const auto session = a->begin_session("media", kBase);
    std::size_t expected_assets = 0;
    for (int i = 0; i < 4; ++i) {
        const std::string path = "/m/img" + std::to_string(i) + ".jpg";
        srv.add(path, std::string(2000 + i * 100, static_cast<char>('a' + i)), "image/jpeg", {500, 500, 200});
        a->record_observation(tidal::test::make_item("img" + std::to_string(i), kBase - 100, srv.url(path)),
                              session.session_id, "env-m", kBase);
        ++expected_assets;
    }
    srv.add("/m/clip.mp4", std::string(50000, 'v'), "video/mp4", {500, 500, 200});
    srv.add("/m/clip.jpg", "poster", "image/jpeg", {500, 500, 200});
    StoryItem video = tidal::test::make_item("vid0", kBase - 100, srv.url("/m/clip.mp4"));
    video.media_kind = MediaKind::Video;
    video.duration_s = 4.5;
    video.media.push_back({srv.url("/m/clip.jpg"), 1080, 1920, MediaRole::Poster, false});
    a->record_observation(video, session.session_id, "env-m", kBase);
    expected_assets += 2;

    FetchOptions opts;
    opts.max_retries = 2;
    opts.use_env_proxy = false;
    const auto report = fetch_pending(*a, opts);
    expect_eq(report.fetched, expected_assets, "fetched");
    expect_eq(report.failed, std::size_t{0}, "failed");
    for (const auto& asset : a->assets()) expect_eq(asset.attempts, 3, "attempts for " + asset.url);
    expect_eq(verify_media(*a).size(), std::size_t{0}, "discrepancies after fetch");

    {
        std::fstream f(dir / "media/img2_0.jpg", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(10);
        f.put('#');
    }
    const auto d = verify_media(*a);
    expect_eq(d.size(), std::size_t{1}, "discrepancies after corrupting one file");
    expect_eq(d[0].problem, std::string("hash_mismatch"), "discrepancy kind");
    return std::to_string(expected_assets) + " assets after 500,500,200; 1 discrepancy after corruption";
}

std::string export_properties() {
    TempDir dir("acc");
    auto a = Archive::open(dir.path());
    ingest_ndjson(fixture("fx_stream.ndjson"), PatternTable::defaults(), *a);
    ingest_ndjson_text(synthetic_ndjson(300, 10, 12), PatternTable::defaults(), *a);

    std::ostringstream plain_out, pseudo_out;
    export_csv(*a, {}, plain_out);
    ExportConfig cfg;
    cfg.pseudonymize = true;
    cfg.key.emplace("acceptance-pseudonym-key-0001");
    export_csv(*a, cfg, pseudo_out);

    const auto plain = tidal::test::read_csv(plain_out.str());
    const auto pseudo = tidal::test::read_csv(pseudo_out.str());
    std::set<std::string> archived_ids, exported_ids, usernames;
    for (const auto& it : a->list_items()) {
        archived_ids.insert(it.item_id);
        usernames.insert(it.author_username);
        for (const auto& s : it.stickers)
            if (const auto* m = std::get_if<sticker::Mention>(&s)) usernames.insert(m->username);
    }
    for (std::size_t r = 1; r < plain.size(); ++r) exported_ids.insert(plain[r].at(0));
    expect_eq(plain.size() - 1, archived_ids.size(), "row count");
    expect(exported_ids == archived_ids, "item_id set differs after round-trip");

    const std::string& pseudo_text = pseudo_out.str();
    for (const auto& u : usernames) expect(pseudo_text.find(u) == std::string::npos, "raw username present: " + u);

    std::set<std::size_t> name_cols;
    const auto cols = export_columns();
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (const auto n : name_bearing_columns())
            if (cols[c] == n) name_cols.insert(c);
    expect_eq(plain.size(), pseudo.size(), "pseudonymized row count");
    for (std::size_t r = 0; r < plain.size(); ++r) {
        expect_eq(plain[r].size(), pseudo[r].size(), "column count");
        for (std::size_t c = 0; c < plain[r].size(); ++c)
            if (!name_cols.count(c)) expect(plain[r][c] == pseudo[r][c], "non-name column " + std::string(cols[c]));
    }
    return std::to_string(archived_ids.size()) + " rows, " + std::to_string(usernames.size()) + " usernames hidden";
}

std::string crash_safety() {
    TempDir work("acc");
    const fs::path original = work / "original";
    {
        auto a = Archive::open(original, tidal::test::fast_options());
        ingest_ndjson_text(synthetic_ndjson(160, 4, 9), PatternTable::defaults(), *a);
    }
    const std::string log = files::read_all(original / "items.ndjson");
    std::vector<std::size_t> boundaries{0};
    for (std::size_t i = 0; i < log.size(); ++i)
        if (log[i] == '\n') boundaries.push_back(i + 1);

    std::vector<std::size_t> cuts = boundaries;
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<std::size_t> any(0, log.size());
    for (int i = 0; i < 60; ++i) cuts.push_back(any(rng));  // torn records as well

    const auto extra = synthetic_ndjson(2, 2, 1, "extra", 9200000000000000000ULL);
    const auto extra_env = envelope_from_json_text(lines_of(extra).at(0));
    std::size_t checked = 0;
    for (const std::size_t cut : cuts) {
        const fs::path copy = work / ("cut-" + std::to_string(checked));
        fs::copy(original, copy, fs::copy_options::recursive);
        fs::resize_file(copy / "items.ndjson", cut);

        const std::size_t complete = static_cast<std::size_t>(
            std::upper_bound(boundaries.begin(), boundaries.end(), cut) - boundaries.begin() - 1);
        std::set<std::string> want;
        const auto prefix = lines_of(log.substr(0, boundaries[complete]));
        for (const auto& l : prefix) want.insert(json::parse(l).at("item_id").get<std::string>());

        ArchiveOptions ro = tidal::test::fast_options();
        ro.read_only = true;
        {
            auto r = Archive::open(copy, ro);
            expect_eq(r->stats().observations, complete, "observations after cut at " + std::to_string(cut));
            std::set<std::string> got;
            for (const auto& it : r->list_items()) got.insert(it.item_id);
            expect(got == want, "item set after cut at " + std::to_string(cut));
        }
        {
            auto w = Archive::open(copy, tidal::test::fast_options());
            expect_eq(fs::file_size(copy / "items.ndjson"), boundaries[complete], "torn tail cut");
            ingest_envelope(extra_env, PatternTable::defaults(), *w);
        }
        auto r = Archive::open(copy, ro);
        expect_eq(r->stats().observations, complete + 2, "appends after recovery at " + std::to_string(cut));
        fs::remove_all(copy);
        ++checked;
    }
    expect(checked >= 100, "fewer than 100 truncation points");
    return std::to_string(checked) + " truncation points (" + std::to_string(boundaries.size()) +
           " record boundaries)";
}

std::string run_capture(const std::string& cmd) {
    std::string out;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) throw Unmet("cannot run " + cmd);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = ::pclose(p);
    if (status != 0) throw Unmet(cmd + " exited with status " + std::to_string(status));
    return out;
}

std::string shell_quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::string no_extension_needed(const std::string& cli) {
    TempDir dir("acc");
    const fs::path via_cli = dir / "cli", via_http = dir / "http";
    const auto stream = fixture("fx_stream.ndjson");

    run_capture(shell_quoted(cli) + " --archive " + shell_quoted(via_cli) + " ingest " + shell_quoted(stream));
    const auto stats = json::parse(run_capture(shell_quoted(cli) + " --archive " + shell_quoted(via_cli) + " stats"));

    {
        auto archive = Archive::open(via_http);
        ServiceConfig cfg;
        cfg.bind = {"127.0.0.1", 0};
        cfg.auth_token = "acceptance-token";
        Service svc(cfg, *archive, PatternTable::defaults());
        const int port = svc.bind();
        std::thread th([&] { svc.run(); });
        httplib::Client c("127.0.0.1", port);
        c.set_bearer_token_auth("acceptance-token");
        bool all_ok = true;
        for (const auto& l : lines_of(files::read_all(stream))) {
            auto res = c.Post("/api/v1/envelopes", l, "application/json");
            all_ok = all_ok && res && res->status == 200;
        }
        svc.stop();
        th.join();
        expect(all_ok, "HTTP envelope posts failed");
    }
    const auto want = expected_counts().at("fx_stream.ndjson").at("distinct_items").get<std::size_t>();
    expect_eq(stats.at("items").get<std::size_t>(), want, "CLI items");
    expect(files::read_all(via_cli / "items.ndjson") == files::read_all(via_http / "items.ndjson"),
           "CLI and HTTP ingestion disagree");
    return "fixtures via CLI and loopback HTTP, " + std::to_string(want) + " items each";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: tidal_acceptance <path-to-tidal-cli>\n";
        return 2;
    }
    const std::string cli = argv[1];

    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
        {"fixture-parse-exactness", fixture_parse_exactness},
        {"dedup-idempotence", dedup_idempotence},
        {"coverage-mathematics", coverage_mathematics},
        {"desk-scale-throughput", desk_scale_throughput},
        {"media-integrity", media_integrity},
        {"export-properties", export_properties},
        {"crash-safety", crash_safety},
        {"no-extension-needed", [&] { return no_extension_needed(cli); }},
    };

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        std::string detail;
        bool ok = false;
        try {
            detail = check();
            ok = true;
        } catch (const std::exception& e) {
            detail = e.what();
        }
        if (!ok) ++failed;
        std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
