#include "service/server.hpp"

#include "common/error.hpp"
#include "common/timefmt.hpp"
#include "export/exporter.hpp"
#include "ingest/ingest.hpp"

#include <httplib.h>
#include <json.hpp>
#include <openssl/crypto.h>

#include <sstream>

namespace tidal {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message) {
    send_json(res, status, {{"error", std::string(error_code_name(code))}, {"message", message}});
}

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::FormatError:
        case ErrorCode::UnknownSession: return 400;
        case ErrorCode::ParseError: return 422;
        case ErrorCode::MissingKey: return 409;
        default: return 500;
    }
}

bool token_matches(const std::string& header, const std::string& token) {
    static constexpr std::string_view kPrefix = "Bearer ";
    if (header.size() != kPrefix.size() + token.size() || header.compare(0, kPrefix.size(), kPrefix) != 0)
        return false;
    return CRYPTO_memcmp(header.data() + kPrefix.size(), token.data(), token.size()) == 0;
}

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

}  // namespace

Service::Service(const ServiceConfig& config, Archive& archive, PatternTable table)
    : config_(config), archive_(archive), table_(std::move(table)), server_(std::make_unique<httplib::Server>()) {
    check_bind_policy(config_);
    if (config_.auth_token.empty())
        fail(ErrorCode::InvalidArgument, "no auth token configured (set auth_token or TIDAL_TOKEN)");
    if (config_.pseudonym_key) key_.emplace(*config_.pseudonym_key);
    install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
    auto& srv = *server_;

    srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (req.path == "/api/v1/health") return httplib::Server::HandlerResponse::Unhandled;
        if (!token_matches(req.get_header_value("Authorization"), config_.auth_token)) {
            send_error(res, 401, ErrorCode::InvalidArgument, "missing or invalid bearer token");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_error(res, http_status_for(e.code()), e.code(), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, ErrorCode::Internal, e.what());
        }
    });

    srv.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    srv.Post("/api/v1/envelopes", [this](const httplib::Request& req, httplib::Response& res) {
        Envelope env;
        try {
            env = envelope_from_json_text(req.body);
        } catch (const Error& e) {
            send_error(res, 400, e.code(), e.what());
            return;
        }
        std::lock_guard lock(ingest_mu_);
        try {
            send_json(res, 200, receipt_to_json(ingest_envelope(env, table_, archive_)));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseError) throw;
            send_json(res, 422, {{"quarantined", true},
                                 {"envelope_id", env.envelope_id},
                                 {"error", std::string(error_code_name(e.code()))},
                                 {"message", e.what()}});
        }
    });

    srv.Get("/api/v1/stats", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, stats_to_json(archive_.stats()));
    });

    srv.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        std::string label;
        try {
            const json body = req.body.empty() ? json::object() : json::parse(req.body);
            if (body.contains("label")) label = body.at("label").get<std::string>();
        } catch (const json::exception& e) {
            send_error(res, 400, ErrorCode::FormatError, std::string("session request: ") + e.what());
            return;
        }
        std::lock_guard lock(ingest_mu_);
        send_json(res, 201, session_to_json(archive_.begin_session(label, now_epoch())));
    });

    srv.Get("/api/v1/export.csv", [this](const httplib::Request& req, httplib::Response& res) {
        ExportConfig cfg;
        cfg.pseudonymize = truthy(req.get_param_value("pseudonymize"));
        cfg.key = key_;
        if (cfg.pseudonymize && !cfg.key) {
            send_error(res, 409, ErrorCode::MissingKey, "pseudonymized export requested but no key is configured");
            return;
        }
        std::ostringstream out;
        export_csv(archive_, cfg, out);
        res.status = 200;
        res.set_header("Content-Disposition", "attachment; filename=\"stories.csv\"");
        res.set_content(out.str(), "text/csv; charset=utf-8");
    });
}

int Service::bind() {
    if (port_ >= 0) return port_;
    const auto& b = config_.bind;
    if (b.port == 0) {
        port_ = server_->bind_to_any_port(b.host);
    } else if (server_->bind_to_port(b.host, b.port)) {
        port_ = b.port;
    }
    if (port_ < 0) fail(ErrorCode::IoError, "cannot bind " + b.to_string());
    return port_;
}

void Service::run() {
    bind();
    server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
}

}  // namespace tidal
