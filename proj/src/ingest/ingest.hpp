#pragma once

#include "archive/archive.hpp"
#include "ingest/endpoint.hpp"
#include "ingest/envelope.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace tidal {

struct IngestReceipt {
    std::string envelope_id;
    EndpointKind kind = EndpointKind::Unrelated;
    std::size_t items_parsed = 0;
    std::size_t items_new = 0;
    std::size_t tray_entries = 0;  // StoryTray telemetry; never creates items
    std::string session_id;        // empty for Unrelated
};

struct IngestSummary {
    std::size_t envelopes = 0;  // lines / HAR entries seen (excluding blank lines)
    std::size_t parsed = 0;
    std::size_t new_items = 0;
    std::size_t rejected = 0;   // malformed envelopes + quarantined payloads
    std::size_t unrelated = 0;
    std::size_t skipped = 0;    // HAR entries without a usable text body

    IngestSummary& operator+=(const IngestReceipt& r);
};

// Classifies, stores the raw envelope, parses and records. Unrelated envelopes
// are counted and dropped. A payload that fails to parse is moved to
// rejected/ and ParseError is rethrown.
IngestReceipt ingest_envelope(const Envelope& env, const PatternTable& table, Archive& archive);

// One Envelope per line. The whole file is read before the archive is touched,
// so an unreadable file (IoError) leaves the archive unchanged.
IngestSummary ingest_ndjson(const std::filesystem::path& path, const PatternTable& table, Archive& archive);
IngestSummary ingest_ndjson_text(std::string_view text, const PatternTable& table, Archive& archive);

// HAR 1.2. Entries whose response has a non-empty text body become envelopes;
// base64/binary or empty bodies are skipped. FormatError for non-HAR input.
IngestSummary ingest_har(const std::filesystem::path& path, const PatternTable& table, Archive& archive);
IngestSummary ingest_har_text(std::string_view text, const PatternTable& table, Archive& archive);

nlohmann::json receipt_to_json(const IngestReceipt& r);
nlohmann::json summary_to_json(const IngestSummary& s);

namespace detail {
// Runs ingest_envelope and folds the outcome into `summary`; payload and
// envelope failures count as rejected instead of propagating. IoError propagates.
void ingest_counted(const Envelope& env, const PatternTable& table, Archive& archive, IngestSummary& summary);
}  // namespace detail

// Picks ingest_har for *.har, ingest_ndjson otherwise.
IngestSummary ingest_file(const std::filesystem::path& path, const PatternTable& table, Archive& archive);

}  // namespace tidal
