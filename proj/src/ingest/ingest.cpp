#include "ingest/ingest.hpp"

#include "common/error.hpp"
#include "common/files.hpp"
#include "story/parser.hpp"

#include <cctype>

namespace tidal {

IngestSummary& IngestSummary::operator+=(const IngestReceipt& r) {
    ++envelopes;
    parsed += r.items_parsed;
    new_items += r.items_new;
    if (r.kind == EndpointKind::Unrelated) ++unrelated;
    return *this;
}

IngestReceipt ingest_envelope(const Envelope& env, const PatternTable& table, Archive& archive) {
    IngestReceipt receipt;
    receipt.envelope_id = env.envelope_id;
    receipt.kind = classify_endpoint(env.source_url, table);
    if (receipt.kind == EndpointKind::Unrelated) return receipt;

    // Raw first: the body is on disk before the parser sees it.
    archive.store_envelope(env);

    std::vector<StoryItem> items;
    try {
        switch (receipt.kind) {
            case EndpointKind::ReelMedia: items = parse_reel_payload(env.body, env.captured_at); break;
            case EndpointKind::Highlight: items = parse_highlight_payload(env.body, env.captured_at); break;
            case EndpointKind::StoryTray: receipt.tray_entries = parse_tray_payload(env.body).size(); break;
            case EndpointKind::Unrelated: break;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseError) throw;
        archive.quarantine_envelope(env, e.what());
        throw;
    }

    receipt.items_parsed = items.size();
    if (receipt.kind == EndpointKind::StoryTray) {
        receipt.session_id = archive.current_session() ? archive.current_session()->session_id : "";
        return receipt;
    }
    auto rec = archive.record_envelope(env, items);
    receipt.items_new = rec.items_new;
    receipt.session_id = rec.session_id;
    return receipt;
}

namespace detail {

void ingest_counted(const Envelope& env, const PatternTable& table, Archive& archive, IngestSummary& summary) {
    try {
        summary += ingest_envelope(env, table, archive);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        ++summary.envelopes;
        ++summary.rejected;
        if (e.code() != ErrorCode::ParseError)
            archive.quarantine_raw(envelope_to_json_line(env), e.what());
    }
}

}  // namespace detail

IngestSummary ingest_ndjson_text(std::string_view text, const PatternTable& table, Archive& archive) {
    IngestSummary summary;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        Envelope env;
        try {
            env = envelope_from_json_text(line);
        } catch (const Error& e) {
            ++summary.envelopes;
            ++summary.rejected;
            archive.quarantine_raw(line, e.what());
            continue;
        }
        detail::ingest_counted(env, table, archive, summary);
    }
    return summary;
}

IngestSummary ingest_ndjson(const std::filesystem::path& path, const PatternTable& table, Archive& archive) {
    const std::string text = files::read_all(path);
    return ingest_ndjson_text(text, table, archive);
}

IngestSummary ingest_file(const std::filesystem::path& path, const PatternTable& table, Archive& archive) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".har") return ingest_har(path, table, archive);
    return ingest_ndjson(path, table, archive);
}

}  // namespace tidal

namespace tidal {

nlohmann::json receipt_to_json(const IngestReceipt& r) {
    nlohmann::json j{{"envelope_id", r.envelope_id},
                     {"kind", std::string(to_string(r.kind))},
                     {"items_parsed", r.items_parsed},
                     {"items_new", r.items_new}};
    if (r.kind == EndpointKind::StoryTray) j["tray_entries"] = r.tray_entries;
    if (!r.session_id.empty()) j["session_id"] = r.session_id;
    return j;
}

nlohmann::json summary_to_json(const IngestSummary& s) {
    return {{"envelopes", s.envelopes}, {"parsed", s.parsed},       {"new_items", s.new_items},
            {"rejected", s.rejected},   {"unrelated", s.unrelated}, {"skipped", s.skipped}};
}

}  // namespace tidal
