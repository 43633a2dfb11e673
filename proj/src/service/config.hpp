#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tidal {

struct BindAddress {
    std::string host = "127.0.0.1";
    int port = 8089;

    std::string to_string() const;  // brackets IPv6 hosts
};

struct ServiceConfig {
    BindAddress bind;
    std::string auth_token;
    std::filesystem::path archive_root = "archive";
    std::optional<std::filesystem::path> pattern_table_path;  // built-in defaults when absent
    bool allow_non_loopback = false;
    std::optional<std::string> pseudonym_key;
};

// "host:port" or "[v6]:port". Throws InvalidArgument.
BindAddress parse_bind_address(std::string_view text);

// 127.0.0.0/8, ::1 and "localhost".
bool is_loopback_host(std::string_view host) noexcept;

// Throws NonLoopbackBind unless the bind host is loopback or the override is set.
void check_bind_policy(const ServiceConfig& config);

// Same keys as the config file. Relative paths resolve against base_dir.
// Throws FormatError.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
// Includes secrets; keep it off disk and out of logs.
nlohmann::json service_config_to_json(const ServiceConfig& config);

using EnvLookup = std::function<const char*(const char*)>;

// Reads an optional JSON config file, then applies TIDAL_TOKEN and
// TIDAL_PSEUDONYM_KEY from the environment. Keys: bind_address, auth_token,
// archive_root, pattern_table_path, allow_non_loopback, pseudonym_key.
// Relative paths in the file resolve against the file's directory.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& getenv_fn);

}  // namespace tidal
