#pragma once

#include "archive/archive.hpp"
#include "export/pseudonym.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <string_view>

namespace tidal {

struct ExportConfig {
    bool pseudonymize = false;
    std::optional<PseudonymKey> key;  // required when pseudonymize
};

// Column order of export schema v1 (docs/csv-schema.md).
std::span<const std::string_view> export_columns() noexcept;

// Columns rewritten by pseudonymization; every other column is identical
// with and without it.
std::span<const std::string_view> name_bearing_columns() noexcept;

// One CRLF-terminated RFC 4180 row per canonical item, ordered by
// (taken_at, item_id), after a header row. Returns the data row count.
// Throws MissingKey when pseudonymizing without a key.
std::size_t export_csv(const Archive& archive, const ExportConfig& config, std::ostream& out);

}  // namespace tidal
