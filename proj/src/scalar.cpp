#include "studyforge/scalar.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <system_error>

namespace studyforge {

std::string render_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
  if (ec != std::errc{}) {
    return "nan";  // cannot happen for a 64-byte buffer, but stay total
  }
  return std::string(buf, end);
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) {
    return false;
  }
  // from_chars(double) rejects a leading '+', which people write in data
  // files; strip it (but not "+-...").
  if (s.front() == '+') {
    s.remove_prefix(1);
    if (s.empty() || s.front() == '-' || s.front() == '+') {
      return false;
    }
  }
  double value = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    return false;
  }
  out = value;
  return true;
}

bool parse_int64(std::string_view s, std::int64_t& out) {
  if (s.empty()) {
    return false;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
    if (s.empty() || s.front() == '-' || s.front() == '+') {
      return false;
    }
  }
  std::int64_t value = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    return false;
  }
  out = value;
  return true;
}

Scalar Scalar::from_text(std::string_view s) {
  std::int64_t i = 0;
  if (parse_int64(s, i)) {
    return Scalar::integer(i);
  }
  double d = 0.0;
  if (parse_double(s, d)) {
    return Scalar::decimal(d);
  }
  return Scalar::text(std::string(s));
}

std::string Scalar::render() const {
  if (is_integer()) {
    return std::to_string(as_integer());
  }
  if (is_decimal()) {
    return render_double(as_decimal());
  }
  return as_text();
}

}  // namespace studyforge
