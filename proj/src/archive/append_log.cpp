#include "archive/append_log.hpp"

#include "common/error.hpp"
#include "common/files.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace tidal {

AppendLog::Recovered AppendLog::read(const std::filesystem::path& path) {
    Recovered out;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return out;
    const std::string data = files::read_all(path);
    std::size_t start = 0;
    while (start < data.size()) {
        auto nl = data.find('\n', start);
        if (nl == std::string::npos) {
            out.torn_tail = true;
            break;
        }
        if (nl > start) out.records.emplace_back(data, start, nl - start);
        start = nl + 1;
        out.valid_bytes = start;
    }
    return out;
}

AppendLog::AppendLog(std::filesystem::path path, bool durable) : path_(std::move(path)), durable_(durable) {
    const auto recovered = read(path_);
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::IoError, "open " + path_.string() + ": " + std::strerror(errno));
    if (recovered.torn_tail && ::ftruncate(fd_, static_cast<off_t>(recovered.valid_bytes)) != 0) {
        int err = errno;
        ::close(fd_);
        fail(ErrorCode::IoError, "truncate torn tail of " + path_.string() + ": " + std::strerror(err));
    }
}

AppendLog::~AppendLog() {
    if (fd_ >= 0) ::close(fd_);
}

void AppendLog::append(std::span<const std::string> records) {
    std::string buf;
    for (const auto& r : records) {
        if (r.find('\n') != std::string::npos) fail(ErrorCode::Internal, "log record contains a newline");
        buf += r;
        buf += '\n';
    }
    std::string_view rest = buf;
    while (!rest.empty()) {
        ssize_t n = ::write(fd_, rest.data(), rest.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::IoError, "append " + path_.string() + ": " + std::strerror(errno));
        }
        rest.remove_prefix(static_cast<std::size_t>(n));
    }
    if (durable_ && ::fdatasync(fd_) != 0)
        fail(ErrorCode::IoError, "fdatasync " + path_.string() + ": " + std::strerror(errno));
}

}  // namespace tidal
