#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace euc::detail {

/// Append-only JSON-lines file. Every append is written and fsync'd before
/// returning. A torn final line left by a crash is dropped on open.
class AppendLog {
 public:
  explicit AppendLog(std::filesystem::path path);
  ~AppendLog();
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  /// Complete lines present when the log was opened.
  const std::vector<std::string>& initial_lines() const { return initial_; }

  void append(const std::string& line);
  void append_all(const std::vector<std::string>& lines);
  /// Replaces the whole log atomically (used by compaction).
  void rewrite(const std::vector<std::string>& lines);

 private:
  void open_for_append();

  std::filesystem::path path_;
  int fd_ = -1;
  std::vector<std::string> initial_;
};

/// Writes to a temp file, fsyncs, renames over `path`, fsyncs the directory.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text_file(const std::filesystem::path& path);

/// Exclusive advisory lock (flock) on `path`, held for the object's lifetime.
/// Throws data-dir-locked when another process holds it.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& path);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace euc::detail
