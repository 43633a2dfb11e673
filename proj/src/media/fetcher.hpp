#pragma once

#include "archive/archive.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tidal {

struct ProxySetting {
    std::string host;
    int port = 0;
    std::string username;
    std::string password;
};

struct FetchOptions {
    int concurrency = 4;
    int max_retries = 3;  // each asset gets at most 1 + max_retries attempts
    std::chrono::milliseconds backoff_base{500};
    double backoff_factor = 2.0;
    double jitter = 0.2;  // +/- fraction applied to each delay
    std::chrono::seconds timeout{30};
    bool use_env_proxy = true;  // HTTP_PROXY / HTTPS_PROXY / NO_PROXY
};

struct FetchReport {
    std::size_t fetched = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;  // previously Failed assets, left as they are

    std::size_t considered() const noexcept { return fetched + failed + skipped; }
};

struct ParsedUrl {
    std::string scheme;  // "http" | "https"
    std::string host;
    int port = 0;
    std::string path_and_query;  // always starts with '/'

    std::string origin() const;  // scheme://host:port
};

std::optional<ParsedUrl> parse_http_url(std::string_view url);

// Delay before retry number `retry` (0-based): base * factor^retry, scaled by
// (1 + jitter * u) for u in [-1, 1].
std::chrono::milliseconds backoff_delay(int retry, const FetchOptions& options, double u);

// Proxy for `url` from the given environment lookup, honoring NO_PROXY.
std::optional<ProxySetting> proxy_for_url(const ParsedUrl& url,
                                          const std::function<const char*(const char*)>& getenv_fn);

// Queues the best Primary ref (plus the Poster for videos) of a recorded
// item. Idempotent per (item_id, url); returns the newly queued count.
std::size_t enqueue_media(Archive& archive, const StoryItem& item);

// Downloads every Pending asset with bounded parallelism. Retries 5xx, 408,
// 429 and transport errors with exponential backoff; other 4xx fail at once.
// Files land as media/<item_id>_<k>.<ext> via media/.tmp and an atomic rename.
FetchReport fetch_pending(Archive& archive, const FetchOptions& options = {});

// Re-hashes every fetched asset. Read-only.
std::vector<MediaDiscrepancy> verify_media(const Archive& archive);

}  // namespace tidal
