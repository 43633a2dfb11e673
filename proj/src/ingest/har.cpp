// HAR 1.2 replay: converts captured browser traffic into envelopes.

#include "common/crypto.hpp"
#include "common/error.hpp"
#include "common/files.hpp"
#include "ingest/ingest.hpp"

namespace tidal {

using nlohmann::json;

namespace {

const json* member(const json& j, const char* key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

}  // namespace

IngestSummary ingest_har_text(std::string_view text, const PatternTable& table, Archive& archive) {
    const json doc = json::parse(text, nullptr, false);
    const json* log = doc.is_discarded() ? nullptr : member(doc, "log");
    const json* entries = log ? member(*log, "entries") : nullptr;
    if (!entries || !entries->is_array()) fail(ErrorCode::FormatError, "not a HAR document (missing log.entries)");
    if (const json* version = member(*log, "version"); version && !version->is_string())
        fail(ErrorCode::FormatError, "HAR log.version must be a string");

    IngestSummary summary;
    for (const auto& entry : *entries) {
        const json* request = member(entry, "request");
        const json* response = member(entry, "response");
        const json* content = response ? member(*response, "content") : nullptr;
        const json* body = content ? member(*content, "text") : nullptr;
        const json* encoding = content ? member(*content, "encoding") : nullptr;

        const bool binary = encoding && encoding->is_string() && encoding->get<std::string>() == "base64";
        if (!body || !body->is_string() || body->get<std::string>().empty() || binary) {
            ++summary.skipped;
            continue;
        }

        const json* started = member(entry, "startedDateTime");
        const json* url = request ? member(*request, "url") : nullptr;
        const json* method = request ? member(*request, "method") : nullptr;
        const json* status = member(*response, "status");
        std::optional<EpochSeconds> captured_at;
        if (started && started->is_string()) captured_at = parse_iso8601(started->get<std::string>());
        if (!captured_at || !url || !url->is_string() || !method || !method->is_string() || !status ||
            !status->is_number_integer()) {
            ++summary.envelopes;
            ++summary.rejected;
            archive.quarantine_raw(entry.dump(-1, ' ', false, json::error_handler_t::replace),
                                   "HAR entry lacks startedDateTime/request/status");
            continue;
        }

        const std::string& text_body = body->get_ref<const std::string&>();
        json env_json{
            {"envelope_id", "har-" + crypto::sha256_hex(started->get<std::string>() + "\n" +
                                                       method->get<std::string>() + " " + url->get<std::string>() +
                                                       "\n" + text_body)
                                         .substr(0, 24)},
            {"source_url", *url},
            {"method", *method},
            {"status", *status},
            {"captured_at", *captured_at},
            {"session_id", nullptr},
            {"body", text_body},
        };
        Envelope env;
        try {
            env = envelope_from_json(env_json);
        } catch (const Error& e) {
            ++summary.envelopes;
            ++summary.rejected;
            archive.quarantine_raw(env_json.dump(-1, ' ', false, json::error_handler_t::replace), e.what());
            continue;
        }
        detail::ingest_counted(env, table, archive, summary);
    }
    return summary;
}

IngestSummary ingest_har(const std::filesystem::path& path, const PatternTable& table, Archive& archive) {
    const std::string text = files::read_all(path);
    return ingest_har_text(text, table, archive);
}

}  // namespace tidal
