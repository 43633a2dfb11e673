#include "common/crypto.hpp"
#include "common/error.hpp"
#include "fixture_server.hpp"
#include "media/fetcher.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>

using namespace tidal;
using tidal::test::fast_options;
using tidal::test::FixtureServer;
using tidal::test::make_item;
using tidal::test::TempDir;

namespace {

FetchOptions quick(int max_retries = 3) {
    FetchOptions o;
    o.max_retries = max_retries;
    o.backoff_base = std::chrono::milliseconds(5);
    o.timeout = std::chrono::seconds(5);
    o.use_env_proxy = false;
    return o;
}

StoryItem video_item(const std::string& id, const std::string& video_url, const std::string& poster_url) {
    StoryItem it = make_item(id, 1000, video_url);
    it.media_kind = MediaKind::Video;
    it.duration_s = 5.0;
    it.media.push_back({poster_url, 1080, 1920, MediaRole::Poster, false});
    return it;
}

// Archive holding one image item and one video item (3 assets), served by `srv`.
std::unique_ptr<Archive> three_asset_archive(const fs::path& root, FixtureServer& srv) {
    srv.add("/img/a.jpg", "jpeg-bytes-a", "image/jpeg");
    srv.add("/vid/b.mp4", std::string(5000, 'v'), "video/mp4");
    srv.add("/vid/b.jpg", "poster-bytes", "image/jpeg");
    auto a = Archive::open(root, fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("img1", 1000, srv.url("/img/a.jpg")), s.session_id, "e1", 2000);
    a->record_observation(video_item("vid1", srv.url("/vid/b.mp4"), srv.url("/vid/b.jpg")), s.session_id, "e1", 2000);
    return a;
}

std::size_t tmp_leftovers(const Archive& a) {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(a.media_dir() / ".tmp")) ++n;
    return n;
}

}  // namespace

TEST_SUITE("media") {

TEST_CASE("enqueue: image 1, video with poster 2, idempotent") {
    TempDir dir;
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    const auto img = make_item("img", 1000);
    const auto vid = video_item("vid", "https://c/v.mp4", "https://c/p.jpg");
    // Recording a new item queues its media.
    a->record_observation(img, s.session_id, "e", 2000);
    a->record_observation(vid, s.session_id, "e", 2000);
    CHECK(a->assets_for("img").size() == 1);
    CHECK(a->assets_for("vid").size() == 2);
    CHECK(a->assets_for("vid")[1].role == MediaRole::Poster);
    CHECK(enqueue_media(*a, img) == 0);
    CHECK(enqueue_media(*a, vid) == 0);
    CHECK(plan_assets(img).size() == 1);
    CHECK(plan_assets(vid).size() == 2);
}

TEST_CASE("healthy server fetches everything") {
    TempDir dir;
    FixtureServer srv;
    auto a = three_asset_archive(dir.path(), srv);
    const auto r = fetch_pending(*a, quick());
    CHECK(r.fetched == 3);
    CHECK(r.failed == 0);
    CHECK(r.skipped == 0);
    CHECK(r.considered() == 3);
    CHECK(verify_media(*a).empty());
    CHECK(tmp_leftovers(*a) == 0);

    std::map<std::string, std::string> paths;
    for (const auto& asset : a->assets()) {
        CHECK(asset.status == AssetStatus::Fetched);
        CHECK(asset.attempts == 1);
        paths[asset.url] = asset.local_path;
        CHECK(crypto::sha256_file_hex(dir / asset.local_path) == asset.content_hash);
        CHECK(fs::file_size(dir / asset.local_path) == asset.bytes);
    }
    CHECK(paths[srv.url("/img/a.jpg")] == "media/img1_0.jpg");
    CHECK(paths[srv.url("/vid/b.mp4")] == "media/vid1_0.mp4");
    CHECK(paths[srv.url("/vid/b.jpg")] == "media/vid1_1.jpg");
    CHECK(a->stats().pending_media == 0);

    // Nothing left to do on a second run.
    CHECK(fetch_pending(*a, quick()).considered() == 0);
}

TEST_CASE("two 500s then 200 with max_retries=2 succeeds") {
    TempDir dir;
    FixtureServer srv;
    srv.add("/flaky.png", "png-bytes", "image/png", {500, 500, 200});
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("f1", 1000, srv.url("/flaky.png")), s.session_id, "e", 2000);
    const auto r = fetch_pending(*a, quick(2));
    CHECK(r.fetched == 1);
    CHECK(r.failed == 0);
    CHECK(srv.hits("/flaky.png") == 3);
    const auto asset = a->assets_for("f1").at(0);
    CHECK(asset.attempts == 3);
    CHECK(asset.local_path == "media/f1_0.png");
}

TEST_CASE("retries are bounded by max_retries") {
    TempDir dir;
    FixtureServer srv;
    srv.add("/down.jpg", "", "image/jpeg", {503});
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("d1", 1000, srv.url("/down.jpg")), s.session_id, "e", 2000);
    const auto r = fetch_pending(*a, quick(2));
    CHECK(r.failed == 1);
    CHECK(srv.hits("/down.jpg") == 3);
    const auto asset = a->assets_for("d1").at(0);
    CHECK(asset.status == AssetStatus::Failed);
    CHECK(asset.attempts == 3);
    CHECK(asset.last_error == "HTTP 503");
    CHECK(tmp_leftovers(*a) == 0);
}

TEST_CASE("404 with max_retries=0 fails after one attempt") {
    TempDir dir;
    FixtureServer srv;
    srv.add("/gone.jpg", "", "image/jpeg", {404});
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("g1", 1000, srv.url("/gone.jpg")), s.session_id, "e", 2000);
    const auto r = fetch_pending(*a, quick(0));
    CHECK(r.fetched == 0);
    CHECK(r.failed == 1);
    CHECK(a->assets_for("g1").at(0).attempts == 1);
}

TEST_CASE("other 4xx are not retried even with retries left") {
    TempDir dir;
    FixtureServer srv;
    srv.add("/forbidden.jpg", "", "image/jpeg", {403});
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("x1", 1000, srv.url("/forbidden.jpg")), s.session_id, "e", 2000);
    CHECK(fetch_pending(*a, quick(3)).failed == 1);
    CHECK(srv.hits("/forbidden.jpg") == 1);
}

TEST_CASE("failed assets are skipped until reset") {
    TempDir dir;
    FixtureServer srv;
    srv.add("/later.jpg", "finally", "image/jpeg", {404, 200});
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("l1", 1000, srv.url("/later.jpg")), s.session_id, "e", 2000);
    CHECK(fetch_pending(*a, quick(0)).failed == 1);
    const auto again = fetch_pending(*a, quick(0));
    CHECK(again.skipped == 1);
    CHECK(again.considered() == 1);
    CHECK(a->reset_failed() == 1);
    CHECK(fetch_pending(*a, quick(0)).fetched == 1);
    CHECK(verify_media(*a).empty());
}

TEST_CASE("unreachable host is a retried transport failure") {
    TempDir dir;
    int dead_port = 0;
    {
        FixtureServer probe;
        dead_port = probe.port();
    }
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("u1", 1000, "http://127.0.0.1:" + std::to_string(dead_port) + "/x.jpg"),
                          s.session_id, "e", 2000);
    const auto r = fetch_pending(*a, quick(1));
    CHECK(r.failed == 1);
    const auto asset = a->assets_for("u1").at(0);
    CHECK(asset.attempts == 2);
    CHECK(asset.last_error.find("transport") != std::string::npos);
}

TEST_CASE("verify detects missing, truncated and corrupted files") {
    TempDir dir;
    FixtureServer srv;
    auto a = three_asset_archive(dir.path(), srv);
    REQUIRE(fetch_pending(*a, quick()).fetched == 3);
    CHECK(verify_media(*a).empty());

    const auto assets = a->assets();
    const fs::path video = dir / "media/vid1_0.mp4";
    {
        // Flip one byte.
        std::fstream f(video, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(100);
        f.put('X');
    }
    auto d = verify_media(*a);
    REQUIRE(d.size() == 1);
    CHECK(d[0].problem == "hash_mismatch");
    CHECK(d[0].item_id == "vid1");

    fs::resize_file(video, 10);
    d = verify_media(*a);
    REQUIRE(d.size() == 1);
    CHECK(d[0].problem == "size_mismatch");

    fs::remove(dir / "media/img1_0.jpg");
    d = verify_media(*a);
    CHECK(d.size() == 2);
}

TEST_CASE("fetched state survives reopen") {
    TempDir dir;
    FixtureServer srv;
    {
        auto a = three_asset_archive(dir.path(), srv);
        fetch_pending(*a, quick());
    }
    auto a = Archive::open(dir.path(), fast_options());
    CHECK(a->stats().pending_media == 0);
    CHECK(verify_media(*a).empty());
    CHECK(fetch_pending(*a, quick()).considered() == 0);
}

TEST_CASE("concurrent fetch runs store each asset once") {
    TempDir dir;
    FixtureServer srv;
    auto a = three_asset_archive(dir.path(), srv);
    FetchReport r1, r2;
    std::thread t1([&] { r1 = fetch_pending(*a, quick()); });
    std::thread t2([&] { r2 = fetch_pending(*a, quick()); });
    t1.join();
    t2.join();
    CHECK(r1.fetched + r2.fetched == 3);
    CHECK(srv.hits("/img/a.jpg") == 1);
    CHECK(srv.hits("/vid/b.mp4") == 1);
    CHECK(srv.hits("/vid/b.jpg") == 1);
    CHECK(tmp_leftovers(*a) == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a->media_dir()))
        if (e.is_regular_file() && e.path().filename() != "assets.ndjson") ++files;
    CHECK(files == 3);
}

TEST_CASE("download order does not change the final archive state") {
    auto final_state = [](int concurrency) {
        TempDir dir;
        FixtureServer srv;
        auto a = three_asset_archive(dir.path(), srv);
        auto o = quick();
        o.concurrency = concurrency;
        fetch_pending(*a, o);
        std::map<std::string, std::pair<std::string, std::string>> out;
        for (const auto& asset : a->assets()) out[asset.local_path] = {asset.content_hash, asset.url.substr(asset.url.rfind('/'))};
        return out;
    };
    CHECK(final_state(1) == final_state(3));
}

TEST_CASE("content type to extension") {
    CHECK(extension_for_content_type("image/jpeg") == "jpg");
    CHECK(extension_for_content_type("image/png") == "png");
    CHECK(extension_for_content_type("video/mp4") == "mp4");
    CHECK(extension_for_content_type("image/webp") == "webp");
    CHECK(extension_for_content_type("IMAGE/JPEG; charset=binary") == "jpg");
    CHECK(extension_for_content_type("text/html") == "bin");
    CHECK(extension_for_content_type("") == "bin");
}

TEST_CASE("backoff schedule") {
    FetchOptions o;
    CHECK(backoff_delay(0, o, 0.0).count() == 500);
    CHECK(backoff_delay(1, o, 0.0).count() == 1000);
    CHECK(backoff_delay(2, o, 0.0).count() == 2000);
    CHECK(backoff_delay(0, o, 1.0).count() == 600);
    CHECK(backoff_delay(0, o, -1.0).count() == 400);
    CHECK(backoff_delay(3, o, -1.0).count() == 3200);
}

TEST_CASE("URL parsing") {
    auto u = parse_http_url("https://cdn.example.test/a/b.jpg?x=1#frag");
    REQUIRE(u);
    CHECK(u->scheme == "https");
    CHECK(u->port == 443);
    CHECK(u->path_and_query == "/a/b.jpg?x=1");
    CHECK(u->origin() == "https://cdn.example.test:443");
    u = parse_http_url("http://[::1]:8080");
    REQUIRE(u);
    CHECK(u->host == "::1");
    CHECK(u->path_and_query == "/");
    CHECK(u->origin() == "http://[::1]:8080");
    CHECK_FALSE(parse_http_url("ftp://x/y"));
    CHECK_FALSE(parse_http_url("http://"));
    CHECK_FALSE(parse_http_url("http://h:0/"));
}

TEST_CASE("proxy selection honors NO_PROXY") {
    std::map<std::string, std::string> env{{"HTTPS_PROXY", "http://user:pw@proxy.lan:3128"},
                                           {"HTTP_PROXY", "proxy.lan:8080"},
                                           {"NO_PROXY", "localhost, .internal.test,127.0.0.1"}};
    auto lookup = [&](const char* name) -> const char* {
        auto it = env.find(name);
        return it == env.end() ? nullptr : it->second.c_str();
    };
    auto p = proxy_for_url(*parse_http_url("https://cdn.example.test/x"), lookup);
    REQUIRE(p);
    CHECK(p->host == "proxy.lan");
    CHECK(p->port == 3128);
    CHECK(p->username == "user");
    CHECK(p->password == "pw");
    p = proxy_for_url(*parse_http_url("http://cdn.example.test/x"), lookup);
    REQUIRE(p);
    CHECK(p->port == 8080);
    CHECK_FALSE(proxy_for_url(*parse_http_url("http://127.0.0.1:9/x"), lookup));
    CHECK_FALSE(proxy_for_url(*parse_http_url("http://media.internal.test/x"), lookup));
    CHECK_FALSE(proxy_for_url(*parse_http_url("http://localhost/x"), lookup));
    env.erase("HTTP_PROXY");
    CHECK_FALSE(proxy_for_url(*parse_http_url("http://cdn.example.test/x"), lookup));
}

TEST_CASE("environment proxy is used for downloads") {
    TempDir dir;
    FixtureServer srv;
    srv.add("/p.jpg", "bytes", "image/jpeg");
    int dead_port = 0;
    {
        FixtureServer probe;
        dead_port = probe.port();
    }
    auto a = Archive::open(dir.path(), fast_options());
    const auto s = a->begin_session("am", 2000);
    a->record_observation(make_item("p1", 1000, srv.url("/p.jpg")), s.session_id, "e", 2000);

    auto o = quick(0);
    o.use_env_proxy = true;
    const std::string proxy = "http://127.0.0.1:" + std::to_string(dead_port);
    ::setenv("HTTP_PROXY", proxy.c_str(), 1);
    ::unsetenv("NO_PROXY");
    ::unsetenv("no_proxy");
    ::unsetenv("http_proxy");
    CHECK(fetch_pending(*a, o).failed == 1);  // routed through the dead proxy
    CHECK(srv.hits("/p.jpg") == 0);

    ::setenv("NO_PROXY", "127.0.0.1", 1);
    a->reset_failed();
    CHECK(fetch_pending(*a, o).fetched == 1);
    ::unsetenv("HTTP_PROXY");
    ::unsetenv("NO_PROXY");
}

}
