#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tidal::files {

namespace fs = std::filesystem;

// Whole-file read. Throws IoError.
std::string read_all(const fs::path& path);

// Writes to a sibling temp file, fsyncs, then renames over `path`.
void write_atomic(const fs::path& path, std::string_view contents, bool durable = true);

// fsync on a directory so renames inside it survive a crash.
void sync_dir(const fs::path& dir);

// Identifier safe for use as a file-name stem: [A-Za-z0-9_.:-], 1..128 chars,
// not starting with '.'. ':' is allowed for highlight-style ids.
bool is_safe_id(std::string_view id) noexcept;

}  // namespace tidal::files
