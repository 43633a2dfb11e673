#pragma once

#include "archive/archive.hpp"
#include "common/files.hpp"
#include "story/story.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace tidal::test {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(TIDAL_FIXTURES_DIR) / name; }
inline std::string fixture_text(const std::string& name) { return files::read_all(fixture(name)); }

// Frozen output of tests/oracle/count_fixtures.py.
inline const nlohmann::json& expected_counts() {
    static const nlohmann::json j = nlohmann::json::parse(fixture_text("expected_counts.json"));
    return j;
}

// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("tidal-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline ArchiveOptions fast_options() {
    ArchiveOptions o;
    o.durable = false;
    return o;
}

// Minimal valid live image item.
inline StoryItem make_item(const std::string& id, EpochSeconds taken_at, const std::string& url = {}) {
    StoryItem it;
    it.item_id = id;
    it.author_id = "42";
    it.author_username = "tester";
    it.taken_at = taken_at;
    it.expiring_at = taken_at + kStoryLifetimeSeconds;
    it.media_kind = MediaKind::Image;
    it.media.push_back({url.empty() ? "https://cdn.example.test/" + id + ".jpg" : url, 1080, 1920,
                        MediaRole::Primary, true});
    return it;
}

}  // namespace tidal::test
