#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace studyforge {

/// A single parameter value: integer, decimal, or text.
///
/// Scalars render to a canonical text form (`render`) used in case maps,
/// command substitution, and collected tables. Decimals use the shortest
/// round-tripping representation in printf-%g style; integers are plain
/// decimal digits; text is passed through verbatim.
class Scalar {
 public:
  Scalar() : value_(std::string{}) {}

  static Scalar integer(std::int64_t v) { return Scalar(v); }
  static Scalar decimal(double v) { return Scalar(v); }
  static Scalar text(std::string v) { return Scalar(std::move(v)); }

  /// Re-infer a scalar from rendered text: a full integer parse wins, then a
  /// full floating-point parse, otherwise the value stays text.
  static Scalar from_text(std::string_view s);

  bool is_integer() const { return std::holds_alternative<std::int64_t>(value_); }
  bool is_decimal() const { return std::holds_alternative<double>(value_); }
  bool is_text() const { return std::holds_alternative<std::string>(value_); }

  std::int64_t as_integer() const { return std::get<std::int64_t>(value_); }
  double as_decimal() const { return std::get<double>(value_); }
  const std::string& as_text() const { return std::get<std::string>(value_); }

  std::string render() const;

  bool operator==(const Scalar& other) const = default;

 private:
  explicit Scalar(std::int64_t v) : value_(v) {}
  explicit Scalar(double v) : value_(v) {}
  explicit Scalar(std::string v) : value_(std::move(v)) {}

  std::variant<std::int64_t, double, std::string> value_;
};

/// Shortest round-tripping %g-style rendering of a double ("0.0001", "1e-05").
std::string render_double(double v);

/// Full-string numeric parse; returns false when any character is left over.
bool parse_double(std::string_view s, double& out);
bool parse_int64(std::string_view s, std::int64_t& out);

}  // namespace studyforge
