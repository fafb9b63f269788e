#include "durable_file.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "euc/error.hpp"

namespace euc::detail {

namespace {

[[noreturn]] void storage_failure(const std::string& what) {
  throw Error("storage-failure", what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const std::string& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_failure("write " + path);
    }
    done += static_cast<std::size_t>(n);
  }
}

void sync_directory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("storage-failure", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AppendLog::AppendLog(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (std::filesystem::exists(path_, ec)) {
    const std::string content = read_text_file(path_);
    std::size_t start = 0, good_end = 0;
    while (true) {
      const auto nl = content.find('\n', start);
      if (nl == std::string::npos) break;
      if (nl > start) initial_.push_back(content.substr(start, nl - start));
      start = nl + 1;
      good_end = start;
    }
    if (good_end < content.size()) {
      // Torn tail from an interrupted append; the write never returned success.
      std::filesystem::resize_file(path_, good_end, ec);
      if (ec) throw Error("storage-failure", "cannot truncate torn tail of " + path_.string());
    }
  }
  open_for_append();
}

AppendLog::~AppendLog() {
  if (fd_ >= 0) ::close(fd_);
}

void AppendLog::open_for_append() {
  const bool created = !std::filesystem::exists(path_);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) storage_failure("open " + path_.string());
  if (created) sync_directory(path_.parent_path());
}

void AppendLog::append(const std::string& line) { append_all({line}); }

void AppendLog::append_all(const std::vector<std::string>& lines) {
  std::string data;
  for (const auto& l : lines) {
    data += l;
    data += '\n';
  }
  write_all(fd_, data, path_.string());
  if (::fsync(fd_) != 0) storage_failure("fsync " + path_.string());
}

void AppendLog::rewrite(const std::vector<std::string>& lines) {
  std::string data;
  for (const auto& l : lines) {
    data += l;
    data += '\n';
  }
  write_file_atomic(path_, data);
  ::close(fd_);
  fd_ = -1;
  open_for_append();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) storage_failure("open " + tmp.string());
  try {
    write_all(fd, content, tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    storage_failure("fsync " + tmp.string());
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) storage_failure("rename " + tmp.string());
  sync_directory(path.parent_path());
}

DirLock::DirLock(const std::filesystem::path& path) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) storage_failure("open " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    if (err == EWOULDBLOCK) throw Error("data-dir-locked", path.parent_path().string() + " is in use by another process");
    errno = err;
    storage_failure("lock " + path.string());
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  if (::ftruncate(fd_, 0) == 0) (void)!::write(fd_, pid.data(), pid.size());
}

DirLock::~DirLock() {
  if (fd_ >= 0) ::close(fd_);
}

}  // namespace euc::detail
