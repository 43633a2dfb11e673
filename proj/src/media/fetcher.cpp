#include "media/fetcher.hpp"

#include "common/crypto.hpp"
#include "common/error.hpp"

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

namespace tidal {

std::string ParsedUrl::origin() const {
    const bool v6 = host.find(':') != std::string::npos;
    return scheme + "://" + (v6 ? "[" + host + "]" : host) + ":" + std::to_string(port);
}

std::optional<ParsedUrl> parse_http_url(std::string_view url) {
    ParsedUrl out;
    if (url.starts_with("https://")) {
        out.scheme = "https";
        out.port = 443;
        url.remove_prefix(8);
    } else if (url.starts_with("http://")) {
        out.scheme = "http";
        out.port = 80;
        url.remove_prefix(7);
    } else {
        return std::nullopt;
    }
    auto end = url.find_first_of("/?#");
    auto authority = url.substr(0, end);
    std::string_view rest = end == std::string_view::npos ? std::string_view{} : url.substr(end);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    if (authority.empty()) return std::nullopt;

    std::string_view host = authority;
    if (authority.front() == '[') {
        auto close = authority.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        host = authority.substr(1, close - 1);
        authority.remove_prefix(close + 1);
        if (!authority.empty()) {
            if (authority.front() != ':') return std::nullopt;
            out.port = std::atoi(std::string(authority.substr(1)).c_str());
        }
    } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        host = authority.substr(0, colon);
        out.port = std::atoi(std::string(authority.substr(colon + 1)).c_str());
    }
    if (host.empty() || out.port <= 0 || out.port > 65535) return std::nullopt;
    out.host = std::string(host);
    if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    out.path_and_query = rest.empty() ? "/" : (rest.front() == '?' ? "/" + std::string(rest) : std::string(rest));
    return out;
}

std::chrono::milliseconds backoff_delay(int retry, const FetchOptions& options, double u) {
    const double base = static_cast<double>(options.backoff_base.count()) * std::pow(options.backoff_factor, retry);
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(base * (1.0 + options.jitter * u))));
}

namespace {

bool no_proxy_matches(std::string_view host, std::string_view no_proxy) {
    while (!no_proxy.empty()) {
        auto comma = no_proxy.find(',');
        auto entry = no_proxy.substr(0, comma);
        no_proxy = comma == std::string_view::npos ? std::string_view{} : no_proxy.substr(comma + 1);
        while (!entry.empty() && entry.front() == ' ') entry.remove_prefix(1);
        while (!entry.empty() && entry.back() == ' ') entry.remove_suffix(1);
        if (auto colon = entry.find(':'); colon != std::string_view::npos && entry.find(']') == std::string_view::npos)
            entry = entry.substr(0, colon);
        if (entry.empty()) continue;
        if (entry == "*") return true;
        if (entry.front() == '.') entry.remove_prefix(1);
        if (host == entry) return true;
        if (host.size() > entry.size() && host.ends_with(entry) && host[host.size() - entry.size() - 1] == '.')
            return true;
    }
    return false;
}

}  // namespace

std::optional<ProxySetting> proxy_for_url(const ParsedUrl& url,
                                          const std::function<const char*(const char*)>& getenv_fn) {
    auto env = [&](const char* upper, const char* lower) -> std::string {
        if (const char* v = getenv_fn(lower); v && *v) return v;
        if (const char* v = getenv_fn(upper); v && *v) return v;
        return {};
    };
    if (no_proxy_matches(url.host, env("NO_PROXY", "no_proxy"))) return std::nullopt;
    std::string proxy = url.scheme == "https" ? env("HTTPS_PROXY", "https_proxy") : env("HTTP_PROXY", "http_proxy");
    if (proxy.empty()) return std::nullopt;
    if (proxy.find("://") == std::string::npos) proxy = "http://" + proxy;
    auto parsed = parse_http_url(proxy);
    if (!parsed) return std::nullopt;
    ProxySetting out{parsed->host, parsed->port, {}, {}};
    auto scheme_end = proxy.find("://") + 3;
    auto at = proxy.find('@', scheme_end);
    if (at != std::string::npos) {
        auto userinfo = proxy.substr(scheme_end, at - scheme_end);
        auto colon = userinfo.find(':');
        out.username = userinfo.substr(0, colon);
        if (colon != std::string::npos) out.password = userinfo.substr(colon + 1);
    }
    return out;
}

std::size_t enqueue_media(Archive& archive, const StoryItem& item) { return archive.enqueue_media(item); }

std::vector<MediaDiscrepancy> verify_media(const Archive& archive) { return archive.verify_media(); }

namespace {

struct AttemptResult {
    bool ok = false;
    bool retriable = false;
    std::string error;
    std::string content_type;
    std::string content_hash;
    std::uint64_t bytes = 0;
};

AttemptResult download_once(const MediaAsset& asset, const fs::path& tmp, const FetchOptions& options) {
    AttemptResult r;
    auto url = parse_http_url(asset.url);
    if (!url) {
        r.error = "unsupported URL";
        return r;
    }
    httplib::Client cli(url->origin());
    cli.set_connection_timeout(options.timeout);
    cli.set_read_timeout(options.timeout);
    cli.set_write_timeout(options.timeout);
    cli.set_follow_location(true);
    if (options.use_env_proxy) {
        if (auto proxy = proxy_for_url(*url, [](const char* n) { return std::getenv(n); })) {
            cli.set_proxy(proxy->host, proxy->port);
            if (!proxy->username.empty()) cli.set_proxy_basic_auth(proxy->username, proxy->password);
        }
    }

    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
        r.error = "cannot create " + tmp.string();
        return r;
    }
    crypto::Sha256Stream hasher;
    int status = 0;
    auto res = cli.Get(
        url->path_and_query, httplib::Headers{},
        [&](const httplib::Response& resp) {
            status = resp.status;
            r.content_type = resp.get_header_value("Content-Type");
            return status >= 200 && status < 300;
        },
        [&](const char* data, std::size_t len) {
            out.write(data, static_cast<std::streamsize>(len));
            hasher.update(data, len);
            r.bytes += len;
            return static_cast<bool>(out);
        });
    out.close();

    if (status != 0 && (status < 200 || status >= 300)) {
        r.error = "HTTP " + std::to_string(status);
        r.retriable = status >= 500 || status == 408 || status == 429;
        return r;
    }
    if (!res) {
        r.error = "transport error: " + httplib::to_string(res.error());
        r.retriable = true;
        return r;
    }
    if (!out) {
        r.error = "write failed: " + tmp.string();
        return r;
    }
    r.ok = true;
    r.content_hash = hasher.finish_hex();
    return r;
}

}  // namespace

FetchReport fetch_pending(Archive& archive, const FetchOptions& options) {
    if (options.concurrency <= 0) fail(ErrorCode::InvalidArgument, "concurrency must be positive");
    if (options.max_retries < 0) fail(ErrorCode::InvalidArgument, "max_retries must be nonnegative");

    AssetClaim claim = archive.claim_pending();
    FetchReport report;
    report.skipped = claim.skipped;
    if (claim.claimed.empty()) return report;

    const fs::path tmp_dir = archive.media_dir() / ".tmp";
    fs::create_directories(tmp_dir);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> fetched{0};
    std::atomic<std::size_t> failed{0};

    auto worker = [&](unsigned seed) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (std::size_t i = next++; i < claim.claimed.size(); i = next++) {
            MediaAsset asset = claim.claimed[i];
            const std::string stem = asset.item_id + "_" + std::to_string(asset.ordinal);
            const fs::path tmp = tmp_dir / (stem + ".part");
            try {
                AttemptResult r;
                asset.attempts = 0;
                for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
                    if (attempt > 0) std::this_thread::sleep_for(backoff_delay(attempt - 1, options, unit(rng)));
                    ++asset.attempts;
                    r = download_once(asset, tmp, options);
                    if (r.ok || !r.retriable) break;
                }
                if (r.ok) {
                    const std::string rel = "media/" + stem + "." + extension_for_content_type(r.content_type);
                    fs::rename(tmp, archive.root() / rel);
                    asset.status = AssetStatus::Fetched;
                    asset.local_path = rel;
                    asset.content_hash = r.content_hash;
                    asset.bytes = r.bytes;
                    asset.fetched_at = now_epoch();
                    archive.complete_fetched(asset);
                    ++fetched;
                } else {
                    std::error_code ec;
                    fs::remove(tmp, ec);
                    asset.status = AssetStatus::Failed;
                    asset.last_error = r.error;
                    archive.complete_failed(asset);
                    ++failed;
                }
            } catch (const std::exception& e) {
                std::error_code ec;
                fs::remove(tmp, ec);
                asset.status = AssetStatus::Failed;
                asset.last_error = e.what();
                try {
                    archive.complete_failed(asset);
                } catch (...) {
                    archive.release_claim(asset);
                }
                ++failed;
            }
        }
    };

    const auto width = std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), claim.claimed.size());
    std::random_device rd;
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < width; ++t) threads.emplace_back(worker, rd());
    for (auto& t : threads) t.join();

    report.fetched = fetched;
    report.failed = failed;
    return report;
}

}  // namespace tidal
