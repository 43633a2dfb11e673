/*
 * libtidal: local archiver for ephemeral stories.
 *
 * Conventions:
 *   - Every fallible call returns tidal_status. On failure, tidal_last_error()
 *     describes the most recent error on the calling thread.
 *   - char** out-parameters receive NUL-terminated UTF-8 owned by the caller;
 *     release them with tidal_string_free(). They are left untouched on error.
 *   - Handles are opaque and must be released with their matching *_close or
 *     *_free function. Passing NULL to a release function is a no-op.
 *   - An archive handle may be shared across threads.
 */
#ifndef TIDAL_TIDAL_H
#define TIDAL_TIDAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(TIDAL_BUILDING_LIBRARY)
#define TIDAL_API __attribute__((visibility("default")))
#else
#define TIDAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tidal_status {
    TIDAL_OK = 0,
    TIDAL_E_INVALID_ARGUMENT,
    TIDAL_E_PARSE,                /* payload body does not match the schema */
    TIDAL_E_FORMAT,               /* envelope, NDJSON, HAR or config is malformed */
    TIDAL_E_IO,
    TIDAL_E_INIT_REFUSED,         /* directory is not empty and not an archive */
    TIDAL_E_INCOMPATIBLE_VERSION,
    TIDAL_E_UNKNOWN_ITEM,
    TIDAL_E_UNKNOWN_SESSION,
    TIDAL_E_EMPTY_CANDIDATES,
    TIDAL_E_INVALID_INTERVAL,
    TIDAL_E_PLAN_TOO_SHORT,
    TIDAL_E_MISSING_KEY,
    TIDAL_E_INVALID_PATTERN_TABLE,
    TIDAL_E_NON_LOOPBACK_BIND,
    TIDAL_E_NETWORK,
    TIDAL_E_INTERNAL
} tidal_status;

typedef enum tidal_endpoint_kind {
    TIDAL_KIND_STORY_TRAY = 0,
    TIDAL_KIND_REEL_MEDIA,
    TIDAL_KIND_HIGHLIGHT,
    TIDAL_KIND_UNRELATED
} tidal_endpoint_kind;

typedef struct tidal_archive tidal_archive;
typedef struct tidal_patterns tidal_patterns;
typedef struct tidal_service tidal_service;

TIDAL_API const char* tidal_version(void);
/* Stable name, e.g. "ParseError". Never NULL. */
TIDAL_API const char* tidal_status_name(tidal_status status);
/* Valid until the next failing call on this thread. Never NULL. */
TIDAL_API const char* tidal_last_error(void);
TIDAL_API void tidal_string_free(char* s);

/* ---- archive ---------------------------------------------------------- */

/* Creates the archive layout when root is absent or empty. A writable open
 * holds the single-writer lock until close. */
TIDAL_API tidal_status tidal_archive_open(const char* root, int read_only, tidal_archive** out);
TIDAL_API void tidal_archive_close(tidal_archive* archive);

/* {"session_id","label","started_at","clock_skew"}. started_at <= 0 means now. */
TIDAL_API tidal_status tidal_session_begin(tidal_archive* archive, const char* label, int64_t started_at,
                                           char** session_json);
/* {"items","observations","sessions","pending_media","last_ingest_at"} */
TIDAL_API tidal_status tidal_stats(const tidal_archive* archive, char** stats_json);
/* Array of canonical item snapshots ordered by (taken_at, item_id). */
TIDAL_API tidal_status tidal_list_items(const tidal_archive* archive, char** items_json);
/* {"canonical","first_seen_at","observations":[...]} or TIDAL_E_UNKNOWN_ITEM. */
TIDAL_API tidal_status tidal_get_item(const tidal_archive* archive, const char* item_id, char** history_json);

/* ---- endpoint patterns ------------------------------------------------ */

TIDAL_API tidal_status tidal_patterns_default(tidal_patterns** out);
/* {"patterns":[{"pattern":"^https://...","kind":"ReelMedia"}, ...]} */
TIDAL_API tidal_status tidal_patterns_load(const char* path, tidal_patterns** out);
TIDAL_API void tidal_patterns_free(tidal_patterns* patterns);
/* Total: unmatched URLs classify as TIDAL_KIND_UNRELATED. */
TIDAL_API tidal_endpoint_kind tidal_classify(const tidal_patterns* patterns, const char* url);

/* ---- ingest ----------------------------------------------------------- */

/* One Envelope JSON document. receipt_json: {"envelope_id","kind",
 * "items_parsed","items_new",...}. A body that fails to parse is quarantined
 * and TIDAL_E_PARSE returned. */
TIDAL_API tidal_status tidal_ingest_envelope(tidal_archive* archive, const tidal_patterns* patterns,
                                             const char* envelope_json, char** receipt_json);
/* NDJSON of envelopes, or HAR when the path ends in ".har".
 * summary_json: {"envelopes","parsed","new_items","rejected","unrelated","skipped"} */
TIDAL_API tidal_status tidal_ingest_file(tidal_archive* archive, const tidal_patterns* patterns, const char* path,
                                         char** summary_json);

/* ---- media ------------------------------------------------------------ */

typedef struct tidal_fetch_options {
    int concurrency;      /* default 4 */
    int max_retries;      /* default 3; attempts per asset <= 1 + max_retries */
    int backoff_base_ms;  /* default 500 */
    int timeout_s;        /* default 30 */
    int retry_failed;     /* non-zero: reset previously failed assets first */
    int use_env_proxy;    /* default 1 */
} tidal_fetch_options;

TIDAL_API void tidal_fetch_options_default(tidal_fetch_options* options);
/* report_json: {"fetched","failed","skipped","reset"} */
TIDAL_API tidal_status tidal_fetch_media(tidal_archive* archive, const tidal_fetch_options* options,
                                         char** report_json);
/* report_json: {"checked","discrepancies":[{"item_id","url","local_path","problem"}]} */
TIDAL_API tidal_status tidal_verify_media(const tidal_archive* archive, char** report_json);

/* ---- export ----------------------------------------------------------- */

/* Writes the CSV atomically to out_path. key may be NULL unless pseudonymize
 * is set (TIDAL_E_MISSING_KEY). rows_out may be NULL. */
TIDAL_API tidal_status tidal_export_csv(const tidal_archive* archive, int pseudonymize, const char* key,
                                        size_t key_len, const char* out_path, size_t* rows_out);
/* "u_" + 16 hex chars. */
TIDAL_API tidal_status tidal_pseudonymize(const char* username, const char* key, size_t key_len, char** token);

/* ---- capture schedule ------------------------------------------------- */

/* "90", "15m", "12h", "7d", "1d12h" -> seconds. */
TIDAL_API tidal_status tidal_parse_duration(const char* text, int64_t* seconds);
/* Sessions, coverage bounds and expected observations as JSON. */
TIDAL_API tidal_status tidal_plan_report(int64_t anchor, int64_t interval_s, int64_t lifetime_s, int64_t horizon_s,
                                         char** report_json);

/* ---- service ---------------------------------------------------------- */

/* Reads the optional config file (path may be NULL), then applies TIDAL_TOKEN
 * and TIDAL_PSEUDONYM_KEY. The result contains secrets. */
TIDAL_API tidal_status tidal_config_resolve(const char* path, char** config_json);
/* Opens the archive named in config_json for writing, loads the pattern
 * table and binds the listening socket. */
TIDAL_API tidal_status tidal_service_create(const char* config_json, tidal_service** out);
TIDAL_API int tidal_service_port(const tidal_service* service);
/* Blocks until tidal_service_stop() is called from another thread. */
TIDAL_API tidal_status tidal_service_run(tidal_service* service);
TIDAL_API void tidal_service_stop(tidal_service* service);
TIDAL_API void tidal_service_free(tidal_service* service);

#ifdef __cplusplus
}
#endif

#endif /* TIDAL_TIDAL_H */
