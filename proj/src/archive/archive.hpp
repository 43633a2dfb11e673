#pragma once

#include "archive/append_log.hpp"
#include "ingest/envelope.hpp"
#include "media/assets.hpp"
#include "story/story.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tidal {

namespace fs = std::filesystem;

inline constexpr int kArchiveFormatVersion = 1;

struct Session {
    std::string session_id;
    std::string label;
    EpochSeconds started_at = 0;
    bool clock_skew = false;  // started before the previous session

    bool operator==(const Session&) const = default;
};

struct Observation {
    std::string item_id;
    std::string session_id;
    std::string envelope_id;
    EpochSeconds observed_at = 0;
    StoryItem item;
};

struct ObservationResult {
    bool is_new_item = false;
    bool duplicate = false;  // (item, session, envelope) already recorded; nothing written
};

struct ItemHistory {
    StoryItem canonical;  // latest observation by observed_at, later log position on ties
    EpochSeconds first_seen_at = 0;
    std::vector<Observation> observations;  // log order
};

struct ItemFilter {
    std::optional<std::string> session_id;
    std::optional<std::string> author;  // author_id or author_username
    std::optional<Origin> origin;
    std::optional<EpochSeconds> since;  // taken_at >= since
    std::optional<EpochSeconds> until;  // taken_at < until
};

struct ArchiveStats {
    std::size_t items = 0;
    std::size_t observations = 0;
    std::size_t sessions = 0;
    std::size_t pending_media = 0;
    std::optional<EpochSeconds> last_ingest_at;
};

// Everything the in-memory index knows, in comparable form. Used to check
// that a rebuilt index matches the incrementally maintained one.
struct IndexSnapshot {
    struct Item {
        std::string canonical_json;
        EpochSeconds first_seen_at = 0;
        std::size_t observations = 0;
        bool operator==(const Item&) const = default;
    };
    std::vector<Session> sessions;
    std::map<std::string, Item> items;
    std::vector<MediaAsset> assets;
    std::size_t observations = 0;
    bool operator==(const IndexSnapshot&) const = default;
};

// Canonical items and media state taken under one lock.
struct CanonicalSnapshot {
    std::vector<StoryItem> items;  // ordered by (taken_at, item_id)
    std::vector<MediaAsset> assets;
};

nlohmann::json session_to_json(const Session& s);
// {items, observations, sessions, pending_media, last_ingest_at|null}
nlohmann::json stats_to_json(const ArchiveStats& s);

struct ArchiveOptions {
    bool read_only = false;  // no lock, no writes, torn tails ignored rather than cut
    bool durable = true;     // fdatasync after every append
};

struct EnvelopeRecord {
    std::string session_id;
    std::size_t items_new = 0;
};

struct AssetClaim {
    std::vector<MediaAsset> claimed;  // now in flight for the caller
    std::size_t skipped = 0;          // Failed assets left alone
};

struct MediaDiscrepancy {
    std::string item_id;
    std::string url;
    std::string local_path;
    std::string problem;  // "missing", "size_mismatch", "hash_mismatch"
};

// The on-disk archive: append-only NDJSON logs plus an index rebuilt from
// them on open. Layout under root:
//
//   archive.meta       format + version stamp
//   sessions.ndjson    Session records
//   items.ndjson       Observation records (full item snapshots)
//   envelopes/         raw envelopes, one file per envelope_id
//   rejected/          quarantined envelopes and unreadable lines
//   media/             downloaded assets, media/assets.ndjson status log
//   export/            CSV exports
//
// One writer per archive directory (flock on .lock). Within a process all
// mutations serialize on an exclusive lock; readers share.
class Archive {
public:
    // Creates the layout in an absent or empty directory, or opens an existing
    // archive. Throws InitRefused (foreign directory), IncompatibleVersion, IoError.
    static std::unique_ptr<Archive> open(const fs::path& root, ArchiveOptions options = {});

    ~Archive();
    Archive(const Archive&) = delete;
    Archive& operator=(const Archive&) = delete;

    const fs::path& root() const noexcept { return root_; }
    bool read_only() const noexcept { return options_.read_only; }

    // Sessions ---------------------------------------------------------------
    Session begin_session(const std::string& label, EpochSeconds started_at);
    std::vector<Session> sessions() const;
    std::optional<Session> current_session() const;

    // Observations -----------------------------------------------------------
    // Throws UnknownSession; InvalidArgument when a Live item is observed before
    // it was taken.
    ObservationResult record_observation(const StoryItem& item, const std::string& session_id,
                                         const std::string& envelope_id, EpochSeconds observed_at);

    // Records all items of one envelope as one append. The envelope's session
    // is used when given (registered on first sight); otherwise the current
    // session, or a new "auto" session when none exists.
    EnvelopeRecord record_envelope(const Envelope& env, std::span<const StoryItem> items);

    ItemHistory get_item(const std::string& item_id) const;  // throws UnknownItem
    std::vector<StoryItem> list_items(const ItemFilter& filter = {}) const;
    ArchiveStats stats() const;
    CanonicalSnapshot canonical_snapshot() const;
    IndexSnapshot index_snapshot() const;

    // Raw custody ------------------------------------------------------------
    // Stores envelopes/<id>.json unless already present with identical content.
    // Throws InvalidArgument when the id was used for a different envelope.
    void store_envelope(const Envelope& env);
    // Moves the envelope into rejected/ together with the reason.
    void quarantine_envelope(const Envelope& env, const std::string& reason);
    // For input that never became an envelope (malformed NDJSON line, ...).
    void quarantine_raw(std::string_view raw, const std::string& reason);
    std::size_t rejected_count() const;

    // Media ------------------------------------------------------------------
    // Idempotent per (item_id, url). Returns the number of newly queued assets.
    std::size_t enqueue_media(const StoryItem& item);
    std::vector<MediaAsset> assets() const;
    std::vector<MediaAsset> assets_for(const std::string& item_id) const;
    // Marks every Pending asset not already in flight as in flight.
    AssetClaim claim_pending();
    void complete_fetched(const MediaAsset& asset);  // asset carries path/hash/bytes/attempts
    void complete_failed(const MediaAsset& asset);   // asset carries attempts/last_error
    void release_claim(const MediaAsset& asset);
    // Failed -> Pending, attempts reset. Returns how many were reset.
    std::size_t reset_failed();
    std::vector<MediaDiscrepancy> verify_media() const;

    fs::path media_dir() const { return root_ / "media"; }
    fs::path export_dir() const { return root_ / "export"; }

private:
    struct ItemEntry {
        EpochSeconds first_seen_at = 0;
        std::vector<std::size_t> observations;  // indexes into observations_
        std::size_t canonical = 0;
    };

    Archive(fs::path root, ArchiveOptions options);

    void create_layout();
    void check_meta();
    void rebuild();
    void require_writable() const;
    std::vector<StoryItem> list_items_locked(const ItemFilter& filter) const;

    // Callers hold mu_ exclusively.
    Session add_session_locked(std::string id, std::string label, EpochSeconds started_at, bool persist);
    const Session* find_session_locked(const std::string& id) const;
    std::string next_session_id_locked() const;
    void apply_observation_locked(Observation obs);
    std::size_t enqueue_locked(const StoryItem& item, bool persist);
    void apply_media_event_locked(const nlohmann::json& ev);
    void persist_media_event_locked(const nlohmann::json& ev);
    MediaAsset* find_asset_locked(const std::string& item_id, const std::string& url);
    static std::string asset_key(const std::string& item_id, const std::string& url);

    fs::path root_;
    ArchiveOptions options_;
    int lock_fd_ = -1;

    mutable std::shared_mutex mu_;
    std::unique_ptr<AppendLog> sessions_log_;
    std::unique_ptr<AppendLog> items_log_;
    std::unique_ptr<AppendLog> media_log_;

    std::vector<Session> sessions_;
    std::unordered_map<std::string, std::size_t> session_index_;
    std::vector<Observation> observations_;
    std::set<std::string> observation_keys_;
    std::unordered_map<std::string, ItemEntry> items_;
    std::vector<MediaAsset> assets_;
    std::unordered_map<std::string, std::size_t> asset_index_;
    std::unordered_map<std::string, int> next_ordinal_;
    std::set<std::size_t> in_flight_;
    std::optional<EpochSeconds> last_observed_at_;
};

}  // namespace tidal
