#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tidal {

// An LF-terminated record log opened in O_APPEND mode. A record is visible to
// readers only once its terminating '\n' is on disk, so a crash can leave at
// most one torn record at the tail.
class AppendLog {
public:
    struct Recovered {
        std::vector<std::string> records;
        std::uintmax_t valid_bytes = 0;  // length of the complete-record prefix
        bool torn_tail = false;
    };

    // Reads all complete records. A missing file reads as empty.
    static Recovered read(const std::filesystem::path& path);

    // Opens for appending; any torn tail is cut off first so new records never
    // glue onto a partial line.
    explicit AppendLog(std::filesystem::path path, bool durable = true);
    ~AppendLog();
    AppendLog(const AppendLog&) = delete;
    AppendLog& operator=(const AppendLog&) = delete;

    // Appends every record in one write(2); records must not contain '\n'.
    void append(std::span<const std::string> records);
    void append(const std::string& record) { append(std::span(&record, 1)); }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    bool durable_;
};

}  // namespace tidal
