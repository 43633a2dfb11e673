#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tidal {

inline constexpr std::size_t kMinPseudonymKeyBytes = 16;

// Secret for keyed pseudonyms. Throws MissingKey when shorter than 16 bytes.
class PseudonymKey {
public:
    explicit PseudonymKey(std::string_view bytes);

    std::span<const unsigned char> bytes() const noexcept {
        return {reinterpret_cast<const unsigned char*>(key_.data()), key_.size()};
    }

private:
    std::string key_;
};

// "u_" + first 16 hex chars of HMAC-SHA256(key, ascii_lowercase(username)).
std::string pseudonymize_username(std::string_view username, const PseudonymKey& key);

}  // namespace tidal
