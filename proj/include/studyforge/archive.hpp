#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace studyforge {

/// Deterministic gzip-compressed ustar writer. Every header uses mode 0644,
/// uid/gid 0, and the timestamp given at construction, so identical inputs
/// added in identical order produce byte-identical archives. Callers are
/// responsible for entry ordering.
class TarGzWriter {
 public:
  TarGzWriter(const std::filesystem::path& out_path, std::int64_t mtime_epoch);
  ~TarGzWriter();
  TarGzWriter(const TarGzWriter&) = delete;
  TarGzWriter& operator=(const TarGzWriter&) = delete;

  /// Add one regular file under the given archive path ('/'-separated,
  /// no leading '/'). Throws Error on overlong paths or write failure.
  void add_file(const std::string& archive_path, std::string_view contents);

  /// Add a file from disk.
  void add_file_from(const std::string& archive_path, const std::filesystem::path& src);

  /// Flush and close. Called by the destructor when not called explicitly,
  /// but only an explicit close reports errors.
  void close();

 private:
  void write_header(const std::string& archive_path, std::uint64_t size);
  void write_bytes(const char* data, std::size_t n);

  void* gz_ = nullptr;  // gzFile, kept opaque here
  std::int64_t mtime_;
  bool closed_ = false;
};

}  // namespace studyforge
