#include "export/pseudonym.hpp"

#include "common/crypto.hpp"
#include "common/error.hpp"

namespace tidal {

PseudonymKey::PseudonymKey(std::string_view bytes) : key_(bytes) {
    if (key_.size() < kMinPseudonymKeyBytes)
        fail(ErrorCode::MissingKey, "pseudonym key must be at least " + std::to_string(kMinPseudonymKeyBytes) +
                                        " bytes (got " + std::to_string(key_.size()) + ")");
}

std::string pseudonymize_username(std::string_view username, const PseudonymKey& key) {
    std::string folded(username);
    for (auto& c : folded)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return "u_" + crypto::hmac_sha256_hex(key.bytes(), folded).substr(0, 16);
}

}  // namespace tidal
