#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace tidal::csv {

// RFC 4180 field: quoted when it contains a comma, quote, CR or LF; inner
// quotes doubled.
std::string escape_field(std::string_view field);

// Writes one record terminated by CRLF.
void write_record(std::ostream& out, std::span<const std::string> fields);

}  // namespace tidal::csv
