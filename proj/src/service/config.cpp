#include "service/config.hpp"

#include "common/error.hpp"
#include "common/files.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <charconv>
#include <cstring>

namespace tidal {

using nlohmann::json;

std::string BindAddress::to_string() const {
    const bool v6 = host.find(':') != std::string::npos;
    return (v6 ? "[" + host + "]" : host) + ":" + std::to_string(port);
}

BindAddress parse_bind_address(std::string_view text) {
    BindAddress b;
    std::string_view host, port;
    if (!text.empty() && text.front() == '[') {
        const auto close = text.find(']');
        if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':')
            fail(ErrorCode::InvalidArgument, "bind address must look like [host]:port");
        host = text.substr(1, close - 1);
        port = text.substr(close + 2);
    } else {
        const auto colon = text.rfind(':');
        if (colon == std::string_view::npos || text.find(':') != colon)
            fail(ErrorCode::InvalidArgument, "bind address must look like host:port");
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    int p = -1;
    auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
    if (host.empty() || ec != std::errc{} || end != port.data() + port.size() || p < 0 || p > 65535)
        fail(ErrorCode::InvalidArgument, "invalid bind address: " + std::string(text));
    b.host = std::string(host);
    b.port = p;
    return b;
}

bool is_loopback_host(std::string_view host) noexcept {
    if (host == "localhost") return true;
    const std::string h(host);
    in_addr v4{};
    if (inet_pton(AF_INET, h.c_str(), &v4) == 1) return (ntohl(v4.s_addr) >> 24) == 127;
    in6_addr v6{};
    if (inet_pton(AF_INET6, h.c_str(), &v6) == 1) {
        static const in6_addr loopback = IN6ADDR_LOOPBACK_INIT;
        return std::memcmp(&v6, &loopback, sizeof v6) == 0;
    }
    return false;
}

void check_bind_policy(const ServiceConfig& config) {
    if (!config.allow_non_loopback && !is_loopback_host(config.bind.host))
        fail(ErrorCode::NonLoopbackBind,
             "refusing to bind " + config.bind.to_string() + "; set allow_non_loopback to override");
}

ServiceConfig service_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) fail(ErrorCode::FormatError, "service config: expected a JSON object");
    auto path_of = [&](const json& v) {
        std::filesystem::path p(v.get<std::string>());
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    auto present = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
    ServiceConfig cfg;
    try {
        if (present("bind_address")) cfg.bind = parse_bind_address(j.at("bind_address").get<std::string>());
        if (present("auth_token")) cfg.auth_token = j.at("auth_token").get<std::string>();
        if (present("archive_root")) cfg.archive_root = path_of(j.at("archive_root"));
        if (present("pattern_table_path")) cfg.pattern_table_path = path_of(j.at("pattern_table_path"));
        if (present("allow_non_loopback")) cfg.allow_non_loopback = j.at("allow_non_loopback").get<bool>();
        if (present("pseudonym_key")) cfg.pseudonym_key = j.at("pseudonym_key").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, std::string("service config: ") + e.what());
    }
    return cfg;
}

json service_config_to_json(const ServiceConfig& c) {
    return {{"bind_address", c.bind.to_string()},
            {"auth_token", c.auth_token},
            {"archive_root", c.archive_root.string()},
            {"pattern_table_path", c.pattern_table_path ? json(c.pattern_table_path->string()) : json(nullptr)},
            {"allow_non_loopback", c.allow_non_loopback},
            {"pseudonym_key", c.pseudonym_key ? json(*c.pseudonym_key) : json(nullptr)}};
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& getenv_fn) {
    ServiceConfig cfg;
    if (file) {
        json j;
        try {
            j = json::parse(files::read_all(*file));
        } catch (const json::exception& e) {
            fail(ErrorCode::FormatError, file->string() + ": " + e.what());
        }
        try {
            cfg = service_config_from_json(j, file->parent_path());
        } catch (const Error& e) {
            fail(e.code(), file->string() + ": " + e.what());
        }
    }
    if (const char* t = getenv_fn("TIDAL_TOKEN"); t && *t) cfg.auth_token = t;
    if (const char* k = getenv_fn("TIDAL_PSEUDONYM_KEY"); k && *k) cfg.pseudonym_key = std::string(k);
    return cfg;
}

}  // namespace tidal
