#include "common/crypto.hpp"

#include "common/error.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <array>
#include <fstream>

namespace tidal::crypto {

std::string to_hex(std::span<const unsigned char> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

struct Sha256Stream::Impl {
    EVP_MD_CTX* ctx = nullptr;
    ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha256Stream::Sha256Stream() : impl_(std::make_unique<Impl>()) {
    impl_->ctx = EVP_MD_CTX_new();
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::Internal, "sha256: digest init failed");
}

Sha256Stream::~Sha256Stream() = default;

void Sha256Stream::update(const char* data, std::size_t len) {
    if (EVP_DigestUpdate(impl_->ctx, data, len) != 1)
        fail(ErrorCode::Internal, "sha256: digest update failed");
}

std::string Sha256Stream::finish_hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(impl_->ctx, md.data(), &len) != 1)
        fail(ErrorCode::Internal, "sha256: digest final failed");
    return to_hex({md.data(), len});
}

std::string sha256_hex(std::string_view data) {
    Sha256Stream s;
    s.update(data.data(), data.size());
    return s.finish_hex();
}

std::string sha256_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    Sha256Stream s;
    std::array<char, 64 * 1024> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) s.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) fail(ErrorCode::IoError, "read failed: " + path.string());
    return s.finish_hex();
}

std::string hmac_sha256_hex(std::span<const unsigned char> key, std::string_view message) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
              reinterpret_cast<const unsigned char*>(message.data()), message.size(),
              md.data(), &len))
        fail(ErrorCode::Internal, "hmac-sha256 failed");
    return to_hex({md.data(), len});
}

}  // namespace tidal::crypto
