#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace tidal::crypto {

std::string to_hex(std::span<const unsigned char> bytes);

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view data);

// SHA-256 of a file's contents, lowercase hex. Throws IoError when unreadable.
std::string sha256_file_hex(const std::filesystem::path& path);

// HMAC-SHA256(key, message), lowercase hex.
std::string hmac_sha256_hex(std::span<const unsigned char> key, std::string_view message);

// Incremental SHA-256 for streamed downloads.
class Sha256Stream {
public:
    Sha256Stream();
    ~Sha256Stream();
    Sha256Stream(const Sha256Stream&) = delete;
    Sha256Stream& operator=(const Sha256Stream&) = delete;

    void update(const char* data, std::size_t len);
    std::string finish_hex();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tidal::crypto
