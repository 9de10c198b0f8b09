#include "studyforge/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "studyforge/error.hpp"

namespace studyforge {

namespace {

struct DigestContext {
  EVP_MD_CTX* ctx;

  DigestContext() : ctx(EVP_MD_CTX_new()) {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
      throw Error("cannot initialize sha-256");
    }
  }
  ~DigestContext() { EVP_MD_CTX_free(ctx); }

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx, data, n) != 1) {
      throw Error("sha-256 update failed");
    }
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, digest.data(), &len) != 1) {
      throw Error("sha-256 finalize failed");
    }
    static const char* alphabet = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out += alphabet[digest[i] >> 4];
      out += alphabet[digest[i] & 0x0F];
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  DigestContext d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read '" + path.string() + "'");
  }
  DigestContext d;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    std::streamsize got = in.gcount();
    if (got > 0) {
      d.update(buf.data(), static_cast<std::size_t>(got));
    }
  }
  if (in.bad()) {
    throw Error("read error on '" + path.string() + "'");
  }
  return d.hex();
}

}  // namespace studyforge
