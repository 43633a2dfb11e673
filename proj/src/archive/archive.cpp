#include "archive/archive.hpp"

#include "common/crypto.hpp"
#include "common/error.hpp"
#include "common/files.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <tuple>

namespace tidal {

using nlohmann::json;

json session_to_json(const Session& s) {
    return json{{"session_id", s.session_id}, {"label", s.label}, {"started_at", s.started_at},
                {"clock_skew", s.clock_skew}};
}

json stats_to_json(const ArchiveStats& s) {
    return json{{"items", s.items},
                {"observations", s.observations},
                {"sessions", s.sessions},
                {"pending_media", s.pending_media},
                {"last_ingest_at", s.last_ingest_at ? json(*s.last_ingest_at) : json(nullptr)}};
}

namespace {

constexpr const char* kFormatName = "tidal-archive";

std::string observation_key(const std::string& item, const std::string& session, const std::string& envelope) {
    std::string k = item;
    k += '\x1f';
    k += session;
    k += '\x1f';
    k += envelope;
    return k;
}

json observation_to_json(const Observation& o) {
    return json{{"item_id", o.item_id}, {"session_id", o.session_id}, {"envelope_id", o.envelope_id},
                {"observed_at", o.observed_at}, {"item", o.item}};
}

Observation observation_from_json(const json& j) {
    Observation o;
    o.item_id = j.at("item_id").get<std::string>();
    o.session_id = j.at("session_id").get<std::string>();
    o.envelope_id = j.at("envelope_id").get<std::string>();
    o.observed_at = j.at("observed_at").get<EpochSeconds>();
    o.item = j.at("item").get<StoryItem>();
    if (o.item.item_id != o.item_id) fail(ErrorCode::FormatError, "observation item_id mismatch");
    return o;
}

json parse_record(const std::string& line, const fs::path& log, std::size_t index) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::FormatError, log.string() + ": record " + std::to_string(index + 1) + " is not valid JSON");
    return j;
}

}  // namespace

std::unique_ptr<Archive> Archive::open(const fs::path& root, ArchiveOptions options) {
    std::unique_ptr<Archive> a(new Archive(root, options));
    return a;
}

Archive::Archive(fs::path root, ArchiveOptions options) : root_(std::move(root)), options_(options) {
    std::error_code ec;
    const bool exists = fs::exists(root_, ec);
    if (exists && !fs::is_directory(root_, ec)) fail(ErrorCode::IoError, root_.string() + " is not a directory");

    const bool has_meta = exists && fs::exists(root_ / "archive.meta", ec);
    if (!has_meta) {
        if (exists && !fs::is_empty(root_, ec))
            fail(ErrorCode::InitRefused, root_.string() + " contains files but no archive.meta; refusing to initialize");
        if (options_.read_only) fail(ErrorCode::IoError, root_.string() + " is not an archive");
        fs::create_directories(root_, ec);
        if (ec) fail(ErrorCode::IoError, "create " + root_.string() + ": " + ec.message());
    }

    if (!options_.read_only) {
        lock_fd_ = ::open((root_ / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (lock_fd_ < 0) fail(ErrorCode::IoError, "open lock file: " + std::string(std::strerror(errno)));
        if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(lock_fd_);
            lock_fd_ = -1;
            fail(ErrorCode::IoError, root_.string() + " is locked by another writer");
        }
    }

    try {
        if (!has_meta) create_layout();
        check_meta();
        rebuild();
        if (!options_.read_only) {
            sessions_log_ = std::make_unique<AppendLog>(root_ / "sessions.ndjson", options_.durable);
            items_log_ = std::make_unique<AppendLog>(root_ / "items.ndjson", options_.durable);
            media_log_ = std::make_unique<AppendLog>(root_ / "media" / "assets.ndjson", options_.durable);
        }
    } catch (...) {
        if (lock_fd_ >= 0) ::close(lock_fd_);
        throw;
    }
}

Archive::~Archive() {
    if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Archive::create_layout() {
    for (const char* dir : {"envelopes", "rejected", "media", "media/.tmp", "export"}) {
        std::error_code ec;
        fs::create_directories(root_ / dir, ec);
        if (ec) fail(ErrorCode::IoError, "create " + (root_ / dir).string() + ": " + ec.message());
    }
    json meta{{"format", kFormatName}, {"version", kArchiveFormatVersion}, {"created_at", now_epoch()}};
    for (const char* log : {"sessions.ndjson", "items.ndjson", "media/assets.ndjson"})
        if (!fs::exists(root_ / log)) files::write_atomic(root_ / log, "", options_.durable);
    // Written last: a directory with archive.meta is a complete layout.
    files::write_atomic(root_ / "archive.meta", meta.dump(2) + "\n", options_.durable);
}

void Archive::check_meta() {
    json meta = json::parse(files::read_all(root_ / "archive.meta"), nullptr, false);
    if (meta.is_discarded() || !meta.is_object() || meta.value("format", "") != kFormatName)
        fail(ErrorCode::IncompatibleVersion, "archive.meta is not a " + std::string(kFormatName) + " stamp");
    if (!meta.contains("version") || !meta["version"].is_number_integer() ||
        meta["version"].get<int>() != kArchiveFormatVersion)
        fail(ErrorCode::IncompatibleVersion,
             "archive version " + meta.value("version", json(nullptr)).dump() + " is not supported (expected " +
                 std::to_string(kArchiveFormatVersion) + ")");
    if (!options_.read_only)
        for (const char* dir : {"envelopes", "rejected", "media", "media/.tmp", "export"})
            fs::create_directories(root_ / dir);
}

void Archive::require_writable() const {
    if (options_.read_only) fail(ErrorCode::InvalidArgument, "archive opened read-only");
}

void Archive::rebuild() {
    std::unique_lock lock(mu_);
    const auto sess = AppendLog::read(root_ / "sessions.ndjson");
    for (std::size_t i = 0; i < sess.records.size(); ++i) {
        json j = parse_record(sess.records[i], root_ / "sessions.ndjson", i);
        Session s{j.at("session_id").get<std::string>(), j.at("label").get<std::string>(),
                  j.at("started_at").get<EpochSeconds>(), j.value("clock_skew", false)};
        if (session_index_.count(s.session_id)) continue;
        session_index_[s.session_id] = sessions_.size();
        sessions_.push_back(std::move(s));
    }

    std::vector<Session> recovered_sessions;
    const auto items = AppendLog::read(root_ / "items.ndjson");
    for (std::size_t i = 0; i < items.records.size(); ++i) {
        Observation obs;
        try {
            obs = observation_from_json(parse_record(items.records[i], root_ / "items.ndjson", i));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::FormatError, "items.ndjson record " + std::to_string(i + 1) + ": " + e.what());
        }
        if (!find_session_locked(obs.session_id)) {
            // Session record lost to a torn sessions log; re-register it.
            Session s{obs.session_id, "recovered", obs.observed_at, false};
            session_index_[s.session_id] = sessions_.size();
            sessions_.push_back(s);
            recovered_sessions.push_back(std::move(s));
        }
        apply_observation_locked(std::move(obs));
    }

    const auto media = AppendLog::read(root_ / "media" / "assets.ndjson");
    for (std::size_t i = 0; i < media.records.size(); ++i)
        apply_media_event_locked(parse_record(media.records[i], root_ / "media/assets.ndjson", i));

    if (!recovered_sessions.empty() && !options_.read_only) {
        AppendLog log(root_ / "sessions.ndjson", options_.durable);
        std::vector<std::string> lines;
        for (const auto& s : recovered_sessions) lines.push_back(session_to_json(s).dump());
        log.append(lines);
    }
}

// ---------------------------------------------------------------------------
// Sessions

const Session* Archive::find_session_locked(const std::string& id) const {
    auto it = session_index_.find(id);
    return it == session_index_.end() ? nullptr : &sessions_[it->second];
}

std::string Archive::next_session_id_locked() const {
    for (std::size_t n = sessions_.size() + 1;; ++n) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%06zu", n);
        if (!session_index_.count(buf)) return buf;
    }
}

Session Archive::add_session_locked(std::string id, std::string label, EpochSeconds started_at, bool persist) {
    Session s{std::move(id), std::move(label), started_at, false};
    if (!sessions_.empty() && started_at < sessions_.back().started_at) s.clock_skew = true;
    if (persist) sessions_log_->append(session_to_json(s).dump());
    session_index_[s.session_id] = sessions_.size();
    sessions_.push_back(s);
    return s;
}

Session Archive::begin_session(const std::string& label, EpochSeconds started_at) {
    require_writable();
    std::unique_lock lock(mu_);
    return add_session_locked(next_session_id_locked(), label, started_at, true);
}

std::vector<Session> Archive::sessions() const {
    std::shared_lock lock(mu_);
    return sessions_;
}

std::optional<Session> Archive::current_session() const {
    std::shared_lock lock(mu_);
    if (sessions_.empty()) return std::nullopt;
    return sessions_.back();
}

// ---------------------------------------------------------------------------
// Observations

void Archive::apply_observation_locked(Observation obs) {
    observation_keys_.insert(observation_key(obs.item_id, obs.session_id, obs.envelope_id));
    const std::size_t idx = observations_.size();
    if (!last_observed_at_ || obs.observed_at > *last_observed_at_) last_observed_at_ = obs.observed_at;

    auto [it, inserted] = items_.try_emplace(obs.item_id);
    ItemEntry& entry = it->second;
    if (inserted) {
        entry.first_seen_at = obs.observed_at;
        entry.canonical = idx;
        enqueue_locked(obs.item, /*persist=*/false);
    } else {
        entry.first_seen_at = std::min(entry.first_seen_at, obs.observed_at);
        if (obs.observed_at >= observations_[entry.canonical].observed_at) entry.canonical = idx;
    }
    entry.observations.push_back(idx);
    observations_.push_back(std::move(obs));
}

ObservationResult Archive::record_observation(const StoryItem& item, const std::string& session_id,
                                              const std::string& envelope_id, EpochSeconds observed_at) {
    require_writable();
    std::unique_lock lock(mu_);
    if (!find_session_locked(session_id)) fail(ErrorCode::UnknownSession, "unknown session " + session_id);
    if (item.origin == Origin::Live && observed_at < item.taken_at)
        fail(ErrorCode::InvalidArgument, "live item " + item.item_id + " observed before it was taken");
    if (observation_keys_.count(observation_key(item.item_id, session_id, envelope_id)))
        return {false, true};
    Observation obs{item.item_id, session_id, envelope_id, observed_at, item};
    items_log_->append(observation_to_json(obs).dump());
    const bool is_new = !items_.count(item.item_id);
    apply_observation_locked(std::move(obs));
    return {is_new, false};
}

EnvelopeRecord Archive::record_envelope(const Envelope& env, std::span<const StoryItem> items) {
    require_writable();
    std::unique_lock lock(mu_);
    EnvelopeRecord out;
    if (env.session_id) {
        if (!find_session_locked(*env.session_id))
            add_session_locked(*env.session_id, *env.session_id, env.captured_at, true);
        out.session_id = *env.session_id;
    } else if (!sessions_.empty()) {
        out.session_id = sessions_.back().session_id;
    } else {
        out.session_id = add_session_locked(next_session_id_locked(), "auto", env.captured_at, true).session_id;
    }

    std::vector<Observation> fresh;
    std::set<std::string> batch_keys;
    for (const auto& item : items) {
        if (item.origin == Origin::Live && env.captured_at < item.taken_at)
            fail(ErrorCode::InvalidArgument, "live item " + item.item_id + " observed before it was taken");
        auto key = observation_key(item.item_id, out.session_id, env.envelope_id);
        if (observation_keys_.count(key) || !batch_keys.insert(key).second) continue;
        fresh.push_back({item.item_id, out.session_id, env.envelope_id, env.captured_at, item});
    }
    if (fresh.empty()) return out;

    std::vector<std::string> lines;
    lines.reserve(fresh.size());
    for (const auto& o : fresh) lines.push_back(observation_to_json(o).dump());
    items_log_->append(lines);
    for (auto& o : fresh) {
        if (!items_.count(o.item_id)) ++out.items_new;
        apply_observation_locked(std::move(o));
    }
    return out;
}

ItemHistory Archive::get_item(const std::string& item_id) const {
    std::shared_lock lock(mu_);
    auto it = items_.find(item_id);
    if (it == items_.end()) fail(ErrorCode::UnknownItem, "unknown item " + item_id);
    ItemHistory h;
    h.canonical = observations_[it->second.canonical].item;
    h.first_seen_at = it->second.first_seen_at;
    for (auto idx : it->second.observations) h.observations.push_back(observations_[idx]);
    return h;
}

std::vector<StoryItem> Archive::list_items(const ItemFilter& f) const {
    std::shared_lock lock(mu_);
    return list_items_locked(f);
}

CanonicalSnapshot Archive::canonical_snapshot() const {
    std::shared_lock lock(mu_);
    return {list_items_locked({}), assets_};
}

std::vector<StoryItem> Archive::list_items_locked(const ItemFilter& f) const {
    std::vector<StoryItem> out;
    for (const auto& [id, entry] : items_) {
        const StoryItem& item = observations_[entry.canonical].item;
        if (f.origin && item.origin != *f.origin) continue;
        if (f.since && item.taken_at < *f.since) continue;
        if (f.until && item.taken_at >= *f.until) continue;
        if (f.author && item.author_id != *f.author && item.author_username != *f.author) continue;
        if (f.session_id) {
            bool seen = std::any_of(entry.observations.begin(), entry.observations.end(),
                                    [&](std::size_t i) { return observations_[i].session_id == *f.session_id; });
            if (!seen) continue;
        }
        out.push_back(item);
    }
    std::sort(out.begin(), out.end(), [](const StoryItem& a, const StoryItem& b) {
        return a.taken_at != b.taken_at ? a.taken_at < b.taken_at : a.item_id < b.item_id;
    });
    return out;
}

ArchiveStats Archive::stats() const {
    std::shared_lock lock(mu_);
    ArchiveStats s;
    s.items = items_.size();
    s.observations = observations_.size();
    s.sessions = sessions_.size();
    s.pending_media = static_cast<std::size_t>(std::count_if(
        assets_.begin(), assets_.end(), [](const MediaAsset& a) { return a.status == AssetStatus::Pending; }));
    s.last_ingest_at = last_observed_at_;
    return s;
}

IndexSnapshot Archive::index_snapshot() const {
    std::shared_lock lock(mu_);
    IndexSnapshot snap;
    snap.sessions = sessions_;
    snap.observations = observations_.size();
    for (const auto& [id, entry] : items_)
        snap.items[id] = {json(observations_[entry.canonical].item).dump(), entry.first_seen_at,
                          entry.observations.size()};
    snap.assets = assets_;
    std::sort(snap.assets.begin(), snap.assets.end(), [](const MediaAsset& a, const MediaAsset& b) {
        return std::tie(a.item_id, a.ordinal, a.url) < std::tie(b.item_id, b.ordinal, b.url);
    });
    return snap;
}

// ---------------------------------------------------------------------------
// Raw custody

void Archive::store_envelope(const Envelope& env) {
    require_writable();
    const std::string line = envelope_to_json_line(env) + "\n";
    const fs::path path = root_ / "envelopes" / (env.envelope_id + ".json");
    std::unique_lock lock(mu_);
    std::error_code ec;
    if (fs::exists(path, ec)) {
        if (files::read_all(path) == line) return;
        fail(ErrorCode::InvalidArgument, "envelope_id " + env.envelope_id + " already stored with different content");
    }
    files::write_atomic(path, line, options_.durable);
}

void Archive::quarantine_envelope(const Envelope& env, const std::string& reason) {
    require_writable();
    json rec{{"reason", reason}, {"envelope", json::parse(envelope_to_json_line(env))}};
    std::unique_lock lock(mu_);
    files::write_atomic(root_ / "rejected" / (env.envelope_id + ".json"), rec.dump() + "\n", options_.durable);
    // Only drop the stored copy if it is this envelope (not a conflicting one).
    const fs::path stored = root_ / "envelopes" / (env.envelope_id + ".json");
    std::error_code ec;
    if (fs::exists(stored, ec) && files::read_all(stored) == envelope_to_json_line(env) + "\n")
        fs::remove(stored, ec);
}

void Archive::quarantine_raw(std::string_view raw, const std::string& reason) {
    require_writable();
    json rec{{"reason", reason}, {"raw", std::string(raw)}};
    const auto name = "line-" + crypto::sha256_hex(raw).substr(0, 16) + ".json";
    std::unique_lock lock(mu_);
    files::write_atomic(root_ / "rejected" / name, rec.dump(-1, ' ', false, json::error_handler_t::replace) + "\n",
                        options_.durable);
}

std::size_t Archive::rejected_count() const {
    std::size_t n = 0;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(root_ / "rejected", ec))
        if (e.path().extension() == ".json") ++n;
    return n;
}

// ---------------------------------------------------------------------------
// Media

std::string Archive::asset_key(const std::string& item_id, const std::string& url) {
    return item_id + '\x1f' + url;
}

MediaAsset* Archive::find_asset_locked(const std::string& item_id, const std::string& url) {
    auto it = asset_index_.find(asset_key(item_id, url));
    return it == asset_index_.end() ? nullptr : &assets_[it->second];
}

std::size_t Archive::enqueue_locked(const StoryItem& item, bool persist) {
    std::size_t queued = 0;
    for (const auto& req : plan_assets(item)) {
        if (find_asset_locked(item.item_id, req.url)) continue;
        MediaAsset a;
        a.item_id = item.item_id;
        a.url = req.url;
        a.role = req.role;
        a.ordinal = next_ordinal_[item.item_id]++;
        if (persist)
            persist_media_event_locked({{"event", "queued"}, {"item_id", a.item_id}, {"url", a.url},
                                        {"ordinal", a.ordinal}, {"role", to_string(a.role)}});
        asset_index_[asset_key(a.item_id, a.url)] = assets_.size();
        assets_.push_back(std::move(a));
        ++queued;
    }
    return queued;
}

std::size_t Archive::enqueue_media(const StoryItem& item) {
    require_writable();
    std::unique_lock lock(mu_);
    if (!items_.count(item.item_id)) fail(ErrorCode::UnknownItem, "enqueue for unrecorded item " + item.item_id);
    return enqueue_locked(item, /*persist=*/true);
}

void Archive::persist_media_event_locked(const json& ev) { media_log_->append(ev.dump()); }

void Archive::apply_media_event_locked(const json& ev) {
    const auto event = ev.value("event", "");
    const auto item_id = ev.value("item_id", "");
    const auto url = ev.value("url", "");
    if (!items_.count(item_id)) return;  // orphaned by a truncated items log
    if (event == "queued") {
        if (find_asset_locked(item_id, url)) return;
        MediaAsset a;
        a.item_id = item_id;
        a.url = url;
        a.ordinal = ev.value("ordinal", 0);
        a.role = ev.value("role", "primary") == "poster" ? MediaRole::Poster : MediaRole::Primary;
        auto& next = next_ordinal_[item_id];
        next = std::max(next, a.ordinal + 1);
        asset_index_[asset_key(item_id, url)] = assets_.size();
        assets_.push_back(std::move(a));
        return;
    }
    MediaAsset* a = find_asset_locked(item_id, url);
    if (!a) return;
    if (event == "fetched") {
        a->status = AssetStatus::Fetched;
        a->local_path = ev.value("local_path", "");
        a->content_hash = ev.value("content_hash", "");
        a->bytes = ev.value("bytes", std::uint64_t{0});
        a->fetched_at = ev.value("fetched_at", EpochSeconds{0});
        a->attempts = ev.value("attempts", 0);
        a->last_error.clear();
    } else if (event == "failed") {
        a->status = AssetStatus::Failed;
        a->attempts = ev.value("attempts", 0);
        a->last_error = ev.value("last_error", "");
    } else if (event == "reset") {
        a->status = AssetStatus::Pending;
        a->attempts = 0;
        a->last_error.clear();
    }
}

std::vector<MediaAsset> Archive::assets() const {
    std::shared_lock lock(mu_);
    return assets_;
}

std::vector<MediaAsset> Archive::assets_for(const std::string& item_id) const {
    std::shared_lock lock(mu_);
    std::vector<MediaAsset> out;
    for (const auto& a : assets_)
        if (a.item_id == item_id) out.push_back(a);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ordinal < b.ordinal; });
    return out;
}

AssetClaim Archive::claim_pending() {
    require_writable();
    std::unique_lock lock(mu_);
    AssetClaim claim;
    for (std::size_t i = 0; i < assets_.size(); ++i) {
        if (assets_[i].status == AssetStatus::Failed) {
            ++claim.skipped;
            continue;
        }
        if (assets_[i].status != AssetStatus::Pending || in_flight_.count(i)) continue;
        in_flight_.insert(i);
        claim.claimed.push_back(assets_[i]);
    }
    return claim;
}

void Archive::complete_fetched(const MediaAsset& asset) {
    require_writable();
    std::unique_lock lock(mu_);
    json ev{{"event", "fetched"},          {"item_id", asset.item_id}, {"url", asset.url},
            {"local_path", asset.local_path}, {"content_hash", asset.content_hash},
            {"bytes", asset.bytes},        {"fetched_at", asset.fetched_at}, {"attempts", asset.attempts}};
    persist_media_event_locked(ev);
    apply_media_event_locked(ev);
    in_flight_.erase(asset_index_.at(asset_key(asset.item_id, asset.url)));
}

void Archive::complete_failed(const MediaAsset& asset) {
    require_writable();
    std::unique_lock lock(mu_);
    json ev{{"event", "failed"}, {"item_id", asset.item_id}, {"url", asset.url},
            {"attempts", asset.attempts}, {"last_error", asset.last_error}};
    persist_media_event_locked(ev);
    apply_media_event_locked(ev);
    in_flight_.erase(asset_index_.at(asset_key(asset.item_id, asset.url)));
}

void Archive::release_claim(const MediaAsset& asset) {
    std::unique_lock lock(mu_);
    auto it = asset_index_.find(asset_key(asset.item_id, asset.url));
    if (it != asset_index_.end()) in_flight_.erase(it->second);
}

std::size_t Archive::reset_failed() {
    require_writable();
    std::unique_lock lock(mu_);
    std::size_t n = 0;
    for (auto& a : assets_) {
        if (a.status != AssetStatus::Failed) continue;
        json ev{{"event", "reset"}, {"item_id", a.item_id}, {"url", a.url}};
        persist_media_event_locked(ev);
        apply_media_event_locked(ev);
        ++n;
    }
    return n;
}

std::vector<MediaDiscrepancy> Archive::verify_media() const {
    const auto snapshot = assets();
    std::vector<MediaDiscrepancy> out;
    for (const auto& a : snapshot) {
        if (a.status != AssetStatus::Fetched) continue;
        const fs::path p = root_ / a.local_path;
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) {
            out.push_back({a.item_id, a.url, a.local_path, "missing"});
            continue;
        }
        if (fs::file_size(p, ec) != a.bytes) {
            out.push_back({a.item_id, a.url, a.local_path, "size_mismatch"});
            continue;
        }
        if (crypto::sha256_file_hex(p) != a.content_hash)
            out.push_back({a.item_id, a.url, a.local_path, "hash_mismatch"});
    }
    return out;
}

}  // namespace tidal
