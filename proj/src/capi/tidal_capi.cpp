#include "tidal/tidal.h"

#include "archive/archive.hpp"
#include "common/error.hpp"
#include "common/files.hpp"
#include "common/timefmt.hpp"
#include "export/exporter.hpp"
#include "export/pseudonym.hpp"
#include "ingest/ingest.hpp"
#include "media/fetcher.hpp"
#include "service/config.hpp"
#include "service/server.hpp"
#include "tide/scheduler.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>

struct tidal_archive {
    std::unique_ptr<tidal::Archive> impl;
};

struct tidal_patterns {
    tidal::PatternTable impl;
};

struct tidal_service {
    std::unique_ptr<tidal::Archive> archive;
    std::unique_ptr<tidal::Service> impl;
};

namespace {

using nlohmann::json;
using tidal::ErrorCode;

thread_local std::string g_last_error;

tidal_status to_status(ErrorCode c) { return static_cast<tidal_status>(static_cast<int>(c)); }

tidal_status set_error(tidal_status s, std::string message) {
    g_last_error = std::move(message);
    return s;
}

// Runs fn, translating exceptions into a status plus the thread's last error.
template <class Fn>
tidal_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        return TIDAL_OK;
    } catch (const tidal::Error& e) {
        return set_error(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(TIDAL_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(TIDAL_E_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

void require(bool ok, const char* what) {
    if (!ok) tidal::fail(ErrorCode::InvalidArgument, what);
}

json observation_json(const tidal::Observation& o) {
    return {{"item_id", o.item_id},
            {"session_id", o.session_id},
            {"envelope_id", o.envelope_id},
            {"observed_at", o.observed_at},
            {"item", o.item}};
}

}  // namespace

extern "C" {

TIDAL_API const char* tidal_version(void) { return "1.0.0"; }

TIDAL_API const char* tidal_status_name(tidal_status status) {
    const int v = static_cast<int>(status);
    if (v < 0 || v > static_cast<int>(ErrorCode::Internal)) return "Unknown";
    return tidal::error_code_name(static_cast<ErrorCode>(v)).data();
}

TIDAL_API const char* tidal_last_error(void) { return g_last_error.c_str(); }

TIDAL_API void tidal_string_free(char* s) { std::free(s); }

TIDAL_API tidal_status tidal_archive_open(const char* root, int read_only, tidal_archive** out) {
    return guarded([&] {
        require(root && out, "root and out are required");
        tidal::ArchiveOptions opts;
        opts.read_only = read_only != 0;
        auto a = tidal::Archive::open(root, opts);
        *out = new tidal_archive{std::move(a)};
    });
}

TIDAL_API void tidal_archive_close(tidal_archive* archive) { delete archive; }

TIDAL_API tidal_status tidal_session_begin(tidal_archive* archive, const char* label, int64_t started_at,
                                           char** session_json) {
    return guarded([&] {
        require(archive && session_json, "archive and session_json are required");
        const auto s = archive->impl->begin_session(label ? label : "", started_at > 0 ? started_at : tidal::now_epoch());
        *session_json = dup_string(tidal::session_to_json(s).dump());
    });
}

TIDAL_API tidal_status tidal_stats(const tidal_archive* archive, char** stats_json) {
    return guarded([&] {
        require(archive && stats_json, "archive and stats_json are required");
        *stats_json = dup_string(tidal::stats_to_json(archive->impl->stats()).dump());
    });
}

TIDAL_API tidal_status tidal_list_items(const tidal_archive* archive, char** items_json) {
    return guarded([&] {
        require(archive && items_json, "archive and items_json are required");
        *items_json = dup_string(json(archive->impl->list_items()).dump());
    });
}

TIDAL_API tidal_status tidal_get_item(const tidal_archive* archive, const char* item_id, char** history_json) {
    return guarded([&] {
        require(archive && item_id && history_json, "archive, item_id and history_json are required");
        const auto h = archive->impl->get_item(item_id);
        json obs = json::array();
        for (const auto& o : h.observations) obs.push_back(observation_json(o));
        *history_json =
            dup_string(json{{"canonical", h.canonical}, {"first_seen_at", h.first_seen_at}, {"observations", obs}}.dump());
    });
}

TIDAL_API tidal_status tidal_patterns_default(tidal_patterns** out) {
    return guarded([&] {
        require(out, "out is required");
        *out = new tidal_patterns{tidal::PatternTable::defaults()};
    });
}

TIDAL_API tidal_status tidal_patterns_load(const char* path, tidal_patterns** out) {
    return guarded([&] {
        require(path && out, "path and out are required");
        *out = new tidal_patterns{tidal::PatternTable::load(path)};
    });
}

TIDAL_API void tidal_patterns_free(tidal_patterns* patterns) { delete patterns; }

TIDAL_API tidal_endpoint_kind tidal_classify(const tidal_patterns* patterns, const char* url) {
    if (!patterns || !url) return TIDAL_KIND_UNRELATED;
    return static_cast<tidal_endpoint_kind>(static_cast<int>(tidal::classify_endpoint(url, patterns->impl)));
}

TIDAL_API tidal_status tidal_ingest_envelope(tidal_archive* archive, const tidal_patterns* patterns,
                                             const char* envelope_json, char** receipt_json) {
    return guarded([&] {
        require(archive && patterns && envelope_json && receipt_json, "all arguments are required");
        const auto env = tidal::envelope_from_json_text(envelope_json);
        const auto r = tidal::ingest_envelope(env, patterns->impl, *archive->impl);
        *receipt_json = dup_string(tidal::receipt_to_json(r).dump());
    });
}

TIDAL_API tidal_status tidal_ingest_file(tidal_archive* archive, const tidal_patterns* patterns, const char* path,
                                         char** summary_json) {
    return guarded([&] {
        require(archive && patterns && path && summary_json, "all arguments are required");
        const auto s = tidal::ingest_file(path, patterns->impl, *archive->impl);
        *summary_json = dup_string(tidal::summary_to_json(s).dump());
    });
}

TIDAL_API void tidal_fetch_options_default(tidal_fetch_options* options) {
    if (!options) return;
    const tidal::FetchOptions d;
    options->concurrency = d.concurrency;
    options->max_retries = d.max_retries;
    options->backoff_base_ms = static_cast<int>(d.backoff_base.count());
    options->timeout_s = static_cast<int>(d.timeout.count());
    options->retry_failed = 0;
    options->use_env_proxy = d.use_env_proxy ? 1 : 0;
}

TIDAL_API tidal_status tidal_fetch_media(tidal_archive* archive, const tidal_fetch_options* options,
                                         char** report_json) {
    return guarded([&] {
        require(archive && report_json, "archive and report_json are required");
        tidal_fetch_options o;
        tidal_fetch_options_default(&o);
        if (options) o = *options;
        require(o.concurrency >= 1, "concurrency must be at least 1");
        require(o.max_retries >= 0, "max_retries must be non-negative");
        require(o.backoff_base_ms >= 0 && o.timeout_s > 0, "invalid backoff or timeout");
        tidal::FetchOptions fo;
        fo.concurrency = o.concurrency;
        fo.max_retries = o.max_retries;
        fo.backoff_base = std::chrono::milliseconds(o.backoff_base_ms);
        fo.timeout = std::chrono::seconds(o.timeout_s);
        fo.use_env_proxy = o.use_env_proxy != 0;
        const std::size_t reset = o.retry_failed ? archive->impl->reset_failed() : 0;
        const auto r = tidal::fetch_pending(*archive->impl, fo);
        *report_json =
            dup_string(json{{"fetched", r.fetched}, {"failed", r.failed}, {"skipped", r.skipped}, {"reset", reset}}
                           .dump());
    });
}

TIDAL_API tidal_status tidal_verify_media(const tidal_archive* archive, char** report_json) {
    return guarded([&] {
        require(archive && report_json, "archive and report_json are required");
        std::size_t checked = 0;
        for (const auto& a : archive->impl->assets())
            if (a.status == tidal::AssetStatus::Fetched) ++checked;
        json list = json::array();
        for (const auto& d : tidal::verify_media(*archive->impl))
            list.push_back({{"item_id", d.item_id}, {"url", d.url}, {"local_path", d.local_path}, {"problem", d.problem}});
        *report_json = dup_string(json{{"checked", checked}, {"discrepancies", list}}.dump());
    });
}

TIDAL_API tidal_status tidal_export_csv(const tidal_archive* archive, int pseudonymize, const char* key,
                                        size_t key_len, const char* out_path, size_t* rows_out) {
    return guarded([&] {
        require(archive && out_path, "archive and out_path are required");
        tidal::ExportConfig cfg;
        cfg.pseudonymize = pseudonymize != 0;
        if (key && key_len) cfg.key.emplace(std::string_view(key, key_len));
        std::ostringstream out;
        const auto rows = tidal::export_csv(*archive->impl, cfg, out);
        tidal::files::write_atomic(out_path, out.str());
        if (rows_out) *rows_out = rows;
    });
}

TIDAL_API tidal_status tidal_pseudonymize(const char* username, const char* key, size_t key_len, char** token) {
    return guarded([&] {
        require(username && key && token, "username, key and token are required");
        const tidal::PseudonymKey k(std::string_view(key, key_len));
        *token = dup_string(tidal::pseudonymize_username(username, k));
    });
}

TIDAL_API tidal_status tidal_parse_duration(const char* text, int64_t* seconds) {
    return guarded([&] {
        require(text && seconds, "text and seconds are required");
        const auto d = tidal::parse_duration(text);
        if (!d) tidal::fail(ErrorCode::InvalidArgument, std::string("invalid duration: ") + text);
        *seconds = *d;
    });
}

TIDAL_API tidal_status tidal_plan_report(int64_t anchor, int64_t interval_s, int64_t lifetime_s, int64_t horizon_s,
                                         char** report_json) {
    return guarded([&] {
        require(report_json, "report_json is required");
        const auto plan = tidal::plan_sessions(anchor, interval_s, horizon_s);
        *report_json = dup_string(tidal::plan_report_json(plan, lifetime_s).dump());
    });
}

TIDAL_API tidal_status tidal_config_resolve(const char* path, char** config_json) {
    return guarded([&] {
        require(config_json, "config_json is required");
        std::optional<std::filesystem::path> file;
        if (path && *path) file = path;
        const auto cfg = tidal::load_service_config(file, [](const char* n) { return std::getenv(n); });
        *config_json = dup_string(tidal::service_config_to_json(cfg).dump());
    });
}

TIDAL_API tidal_status tidal_service_create(const char* config_json, tidal_service** out) {
    return guarded([&] {
        require(config_json && out, "config_json and out are required");
        json j;
        try {
            j = json::parse(config_json);
        } catch (const json::exception& e) {
            tidal::fail(ErrorCode::FormatError, std::string("service config: ") + e.what());
        }
        const auto cfg = tidal::service_config_from_json(j);
        tidal::check_bind_policy(cfg);
        auto table = cfg.pattern_table_path ? tidal::PatternTable::load(*cfg.pattern_table_path)
                                            : tidal::PatternTable::defaults();
        auto svc = std::make_unique<tidal_service>();
        svc->archive = tidal::Archive::open(cfg.archive_root);
        svc->impl = std::make_unique<tidal::Service>(cfg, *svc->archive, std::move(table));
        svc->impl->bind();
        *out = svc.release();
    });
}

TIDAL_API int tidal_service_port(const tidal_service* service) { return service ? service->impl->port() : -1; }

TIDAL_API tidal_status tidal_service_run(tidal_service* service) {
    return guarded([&] {
        require(service, "service is required");
        service->impl->run();
    });
}

TIDAL_API void tidal_service_stop(tidal_service* service) {
    if (service) service->impl->stop();
}

TIDAL_API void tidal_service_free(tidal_service* service) {
    if (!service) return;
    service->impl.reset();  // before the archive it serves
    delete service;
}

}  // extern "C"
