#pragma once

#include "archive/archive.hpp"
#include "export/pseudonym.hpp"
#include "ingest/endpoint.hpp"
#include "service/config.hpp"

#include <memory>
#include <mutex>
#include <optional>

namespace httplib {
class Server;
}

namespace tidal {

// Loopback HTTP surface over one archive:
//
//   GET  /api/v1/health        no auth
//   POST /api/v1/envelopes     Envelope JSON -> receipt
//   GET  /api/v1/stats
//   POST /api/v1/sessions      {"label": "..."}
//   GET  /api/v1/export.csv    ?pseudonymize=true|false
//
// Everything but health requires "Authorization: Bearer <auth_token>" and is
// rejected before the archive is touched.
class Service {
public:
    // Throws NonLoopbackBind, InvalidArgument (empty token), MissingKey
    // (configured pseudonym key too short).
    Service(const ServiceConfig& config, Archive& archive, PatternTable table);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds the configured address; port 0 picks a free one. Returns the port.
    // Throws IoError when the address is unavailable.
    int bind();
    // Serves until stop(). Binds first if needed.
    void run();
    void stop();
    int port() const noexcept { return port_; }

private:
    void install_routes();

    ServiceConfig config_;
    Archive& archive_;
    PatternTable table_;
    std::optional<PseudonymKey> key_;
    std::unique_ptr<httplib::Server> server_;
    std::mutex ingest_mu_;  // one envelope at a time, so archive effects are totally ordered
    int port_ = -1;
};

}  // namespace tidal
