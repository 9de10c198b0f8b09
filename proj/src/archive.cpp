#include "studyforge/archive.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "studyforge/error.hpp"

namespace studyforge {

namespace {

constexpr std::size_t kBlock = 512;

/// Write an octal field: (width-1) digits, NUL terminator.
void put_octal(char* field, std::size_t width, std::uint64_t value) {
  char buf[24];
  const int digits = static_cast<int>(width) - 1;
  const int len = std::snprintf(buf, sizeof(buf), "%0*llo", digits,
                                static_cast<unsigned long long>(value));
  if (len != digits) {
    throw Error("value does not fit a " + std::to_string(digits) +
                "-digit tar header field");
  }
  std::memcpy(field, buf, width);
}

}  // namespace

TarGzWriter::TarGzWriter(const std::filesystem::path& out_path, std::int64_t mtime_epoch)
    : mtime_(mtime_epoch) {
  if (out_path.has_parent_path()) {
    std::filesystem::create_directories(out_path.parent_path());
  }
  // "wb9" = best compression; gzip header carries no file name and, with
  // this zlib, MTIME 0 — archives stay byte-stable across runs.
  gzFile gz = gzopen(out_path.string().c_str(), "wb9");
  if (gz == nullptr) {
    throw Error("cannot create archive '" + out_path.string() + "'");
  }
  gz_ = gz;
}

TarGzWriter::~TarGzWriter() {
  if (!closed_ && gz_ != nullptr) {
    gzclose(static_cast<gzFile>(gz_));
  }
}

void TarGzWriter::write_bytes(const char* data, std::size_t n) {
  if (n == 0) {
    return;
  }
  if (gzwrite(static_cast<gzFile>(gz_), data, static_cast<unsigned>(n)) !=
      static_cast<int>(n)) {
    throw Error("archive write failed");
  }
}

void TarGzWriter::write_header(const std::string& archive_path, std::uint64_t size) {
  if (archive_path.empty() || archive_path.front() == '/') {
    throw Error("archive path must be relative and non-empty");
  }

  // ustar splits long paths into prefix (≤155) + name (≤100) at a '/'.
  std::string name = archive_path;
  std::string prefix;
  if (name.size() > 100) {
    std::size_t split = archive_path.rfind('/', 155);
    if (split == std::string::npos || archive_path.size() - split - 1 > 100) {
      throw Error("archive path too long for ustar: '" + archive_path + "'");
    }
    prefix = archive_path.substr(0, split);
    name = archive_path.substr(split + 1);
  }

  char header[kBlock];
  std::memset(header, 0, sizeof(header));
  std::memcpy(header, name.data(), name.size());                    // name
  put_octal(header + 100, 8, 0644);                                 // mode
  put_octal(header + 108, 8, 0);                                    // uid
  put_octal(header + 116, 8, 0);                                    // gid
  put_octal(header + 124, 12, size);                                // size
  put_octal(header + 136, 12, static_cast<std::uint64_t>(mtime_));  // mtime
  std::memset(header + 148, ' ', 8);  // checksum placeholder
  header[156] = '0';                  // typeflag: regular file
  std::memcpy(header + 257, "ustar", 6);                            // magic
  header[263] = '0';                                                // version
  header[264] = '0';
  // uname/gname left empty; numeric ids are authoritative.
  std::memcpy(header + 345, prefix.data(), prefix.size());          // prefix

  unsigned int checksum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    checksum += static_cast<unsigned char>(header[i]);
  }
  put_octal(header + 148, 7, checksum);
  header[155] = ' ';

  write_bytes(header, kBlock);
}

void TarGzWriter::add_file(const std::string& archive_path, std::string_view contents) {
  write_header(archive_path, contents.size());
  write_bytes(contents.data(), contents.size());
  const std::size_t remainder = contents.size() % kBlock;
  if (remainder != 0) {
    char pad[kBlock];
    std::memset(pad, 0, sizeof(pad));
    write_bytes(pad, kBlock - remainder);
  }
}

void TarGzWriter::add_file_from(const std::string& archive_path,
                                const std::filesystem::path& src) {
  std::ifstream in(src, std::ios::binary);
  if (!in) {
    throw Error("cannot read '" + src.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  add_file(archive_path, buf.str());
}

void TarGzWriter::close() {
  if (closed_) {
    return;
  }
  // Two zero blocks end a tar stream.
  char pad[2 * kBlock];
  std::memset(pad, 0, sizeof(pad));
  write_bytes(pad, sizeof(pad));
  closed_ = true;
  if (gzclose(static_cast<gzFile>(gz_)) != Z_OK) {
    throw Error("closing the archive failed");
  }
}

}  // namespace studyforge
