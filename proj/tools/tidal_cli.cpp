// Operator CLI. Talks to the core only through the C API in libtidal.

#include "tidal/tidal.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

namespace {

using nlohmann::json;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerify = 3;

void print_error(const std::string& code, const std::string& message) {
    std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

struct CliFailure {
    tidal_status status;
};

// Throws CliFailure after printing the error line.
void check(tidal_status s) {
    if (s == TIDAL_OK) return;
    print_error(tidal_status_name(s), tidal_last_error());
    throw CliFailure{s};
}

// Owns a char* returned through the C API.
std::string take(char* s) {
    std::string out = s ? s : "";
    tidal_string_free(s);
    return out;
}

struct ArchiveHandle {
    tidal_archive* h = nullptr;
    ArchiveHandle(const std::string& root, bool read_only) { check(tidal_archive_open(root.c_str(), read_only, &h)); }
    ~ArchiveHandle() { tidal_archive_close(h); }
};

struct PatternsHandle {
    tidal_patterns* h = nullptr;
    explicit PatternsHandle(const std::string& path) {
        check(path.empty() ? tidal_patterns_default(&h) : tidal_patterns_load(path.c_str(), &h));
    }
    ~PatternsHandle() { tidal_patterns_free(h); }
};

struct Globals {
    std::string archive;
    std::string config;
    std::string patterns;
};

json resolved_config(const Globals& g) {
    char* out = nullptr;
    check(tidal_config_resolve(g.config.empty() ? nullptr : g.config.c_str(), &out));
    json cfg = json::parse(take(out));
    if (!g.archive.empty()) cfg["archive_root"] = g.archive;
    if (!g.patterns.empty()) cfg["pattern_table_path"] = g.patterns;
    return cfg;
}

std::string archive_root(const Globals& g) {
    if (!g.archive.empty()) return g.archive;
    return resolved_config(g).at("archive_root").get<std::string>();
}

std::string patterns_path(const Globals& g) {
    const auto cfg = resolved_config(g);
    const auto& p = cfg.at("pattern_table_path");
    return p.is_null() ? std::string() : p.get<std::string>();
}

int64_t duration_arg(const std::string& text) {
    int64_t s = 0;
    check(tidal_parse_duration(text.c_str(), &s));
    return s;
}

void print_plan_table(const json& r) {
    const auto& c = r.at("coverage");
    const auto& e = r.at("expected_observations");
    std::printf("interval        %lld s\n", static_cast<long long>(r.at("interval_s").get<int64_t>()));
    std::printf("lifetime        %lld s\n", static_cast<long long>(r.at("lifetime_s").get<int64_t>()));
    std::printf("horizon         %lld s\n", static_cast<long long>(r.at("horizon_s").get<int64_t>()));
    std::printf("sessions        %zu\n", r.at("session_count").get<std::size_t>());
    std::printf("min observed    %lld\n", static_cast<long long>(c.at("min_observations").get<int64_t>()));
    std::printf("max observed    %lld\n", static_cast<long long>(c.at("max_observations").get<int64_t>()));
    std::printf("margin          %lld s\n", static_cast<long long>(c.at("margin_s").get<int64_t>()));
    std::printf("single-miss ok  %s\n", c.at("single_miss_safe").get<bool>() ? "yes" : "no");
    std::printf("expected        %lld/%lld (%.4f)\n", static_cast<long long>(e.at("num").get<int64_t>()),
                static_cast<long long>(e.at("den").get<int64_t>()), e.at("value").get<double>());
    std::printf("\n%-6s %-22s %s\n", "k", "session_utc", "epoch");
    std::size_t k = 0;
    for (const auto& t : r.at("sessions")) {
        const std::time_t tt = t.get<int64_t>();
        std::tm tm{};
        gmtime_r(&tt, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        std::printf("%-6zu %-22s %lld\n", k++, buf, static_cast<long long>(tt));
    }
}

int run_serve(const Globals& g, const std::string& bind, bool allow_non_loopback) {
    json cfg = resolved_config(g);
    if (!bind.empty()) cfg["bind_address"] = bind;
    if (allow_non_loopback) cfg["allow_non_loopback"] = true;

    // Signals go to a dedicated waiter thread, which stops the service.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    tidal_service* svc = nullptr;
    check(tidal_service_create(cfg.dump().c_str(), &svc));
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        tidal_service_stop(svc);
    });
    std::string host = cfg.value("bind_address", std::string("127.0.0.1:8089"));
    host = host.substr(0, host.rfind(':'));
    std::cout << json{{"listening", host + ":" + std::to_string(tidal_service_port(svc))},
                      {"archive", cfg.at("archive_root")}}
                     .dump()
              << std::endl;
    const tidal_status s = tidal_service_run(svc);
    // Wake the waiter if the server stopped on its own.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    tidal_service_free(svc);
    check(s);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tidal: local-first archiver for ephemeral stories"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--archive", g.archive, "Archive directory (default: config archive_root, else ./archive)");
    app.add_option("--config", g.config, "Service config JSON");
    app.add_option("--patterns", g.patterns, "Endpoint pattern table JSON");

    std::string bind;
    bool allow_non_loopback = false;
    auto* serve = app.add_subcommand("serve", "Run the loopback ingestion service");
    serve->add_option("--bind", bind, "host:port (default 127.0.0.1:8089)");
    serve->add_flag("--allow-non-loopback", allow_non_loopback, "Permit binding a non-loopback address");

    std::string ingest_path;
    auto* ingest = app.add_subcommand("ingest", "Ingest an NDJSON envelope file or a HAR file");
    ingest->add_option("path", ingest_path, "*.ndjson or *.har")->required();

    std::string label;
    auto* session = app.add_subcommand("session", "Session management");
    session->require_subcommand(1);
    auto* session_new = session->add_subcommand("new", "Start a capture session");
    session_new->add_option("--label", label, "Session label");

    tidal_fetch_options fetch_opts;
    tidal_fetch_options_default(&fetch_opts);
    bool retry_failed = false;
    auto* fetch = app.add_subcommand("fetch-media", "Download queued media");
    fetch->add_option("--concurrency", fetch_opts.concurrency)->check(CLI::PositiveNumber);
    fetch->add_option("--max-retries", fetch_opts.max_retries)->check(CLI::NonNegativeNumber);
    fetch->add_option("--timeout", fetch_opts.timeout_s, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
    fetch->add_flag("--retry-failed", retry_failed, "Requeue assets that failed in earlier runs");

    std::string export_out;
    bool pseudonymize = false;
    auto* exp = app.add_subcommand("export", "Write the CSV export");
    exp->add_option("--out", export_out, "Output CSV path")->required();
    exp->add_flag("--pseudonymize", pseudonymize, "Replace usernames with keyed pseudonyms");

    auto* stats = app.add_subcommand("stats", "Print archive statistics");

    std::string interval, lifetime, horizon;
    int64_t anchor = 0;
    bool json_only = false;
    auto* plan = app.add_subcommand("plan", "Plan capture sessions and report coverage");
    plan->add_option("--interval", interval, "Session spacing, e.g. 12h")->required();
    plan->add_option("--lifetime", lifetime, "Story lifetime, e.g. 24h")->required();
    plan->add_option("--horizon", horizon, "Planning horizon, e.g. 7d")->required();
    plan->add_option("--anchor", anchor, "First session, epoch seconds (default now)");
    plan->add_flag("--json", json_only, "Print only the JSON report");

    auto* verify = app.add_subcommand("verify", "Re-hash downloaded media");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("Usage", e.what());
        return kExitUsage;
    }

    try {
        if (*serve) return run_serve(g, bind, allow_non_loopback);

        if (*ingest) {
            ArchiveHandle a(archive_root(g), false);
            PatternsHandle p(patterns_path(g));
            char* out = nullptr;
            check(tidal_ingest_file(a.h, p.h, ingest_path.c_str(), &out));
            std::cout << take(out) << "\n";
        } else if (*session_new) {
            ArchiveHandle a(archive_root(g), false);
            char* out = nullptr;
            check(tidal_session_begin(a.h, label.c_str(), 0, &out));
            std::cout << take(out) << "\n";
        } else if (*fetch) {
            fetch_opts.retry_failed = retry_failed ? 1 : 0;
            ArchiveHandle a(archive_root(g), false);
            char* out = nullptr;
            check(tidal_fetch_media(a.h, &fetch_opts, &out));
            std::cout << take(out) << "\n";
        } else if (*exp) {
            std::string key;
            if (pseudonymize) {
                const auto cfg = resolved_config(g);
                if (!cfg.at("pseudonym_key").is_null()) key = cfg.at("pseudonym_key").get<std::string>();
            }
            ArchiveHandle a(archive_root(g), true);
            std::size_t rows = 0;
            check(tidal_export_csv(a.h, pseudonymize, key.empty() ? nullptr : key.data(), key.size(),
                                   export_out.c_str(), &rows));
            std::cout << json{{"rows", rows}, {"out", export_out}, {"pseudonymized", pseudonymize}}.dump() << "\n";
        } else if (*stats) {
            ArchiveHandle a(archive_root(g), true);
            char* out = nullptr;
            check(tidal_stats(a.h, &out));
            std::cout << take(out) << "\n";
        } else if (*plan) {
            if (!plan->count("--anchor")) anchor = static_cast<int64_t>(std::time(nullptr));
            char* out = nullptr;
            check(tidal_plan_report(anchor, duration_arg(interval), duration_arg(lifetime), duration_arg(horizon), &out));
            const auto report = json::parse(take(out));
            // Table first, then the JSON report as the final line.
            if (!json_only) {
                print_plan_table(report);
                std::cout << "\n";
                std::fflush(stdout);
            }
            std::cout << report.dump() << "\n";
        } else if (*verify) {
            ArchiveHandle a(archive_root(g), true);
            char* out = nullptr;
            check(tidal_verify_media(a.h, &out));
            const auto report = json::parse(take(out));
            std::cout << report.dump() << "\n";
            if (!report.at("discrepancies").empty()) {
                print_error("VerifyFailed",
                            std::to_string(report.at("discrepancies").size()) + " media discrepancies");
                return kExitVerify;
            }
        }
        return 0;
    } catch (const CliFailure&) {
        return kExitError;
    } catch (const std::exception& e) {
        print_error("Internal", e.what());
        return kExitError;
    }
}
