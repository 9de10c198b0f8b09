#pragma once

// Internal: Scalar <-> typed JSON conversion shared by the definition and
// case persistence code. Not part of the public headers to keep json.hpp
// out of the library interface.

#include <json.hpp>

#include "studyforge/error.hpp"
#include "studyforge/scalar.hpp"

namespace studyforge {

inline nlohmann::ordered_json scalar_to_json(const Scalar& s) {
  if (s.is_integer()) {
    return s.as_integer();
  }
  if (s.is_decimal()) {
    return s.as_decimal();
  }
  return s.as_text();
}

inline Scalar scalar_from_json(const nlohmann::ordered_json& j) {
  if (j.is_number_integer()) {
    return Scalar::integer(j.get<std::int64_t>());
  }
  if (j.is_number_float()) {
    return Scalar::decimal(j.get<double>());
  }
  if (j.is_string()) {
    return Scalar::text(j.get<std::string>());
  }
  if (j.is_boolean()) {
    return Scalar::text(j.get<bool>() ? "true" : "false");
  }
  throw Error("expected a scalar JSON value, got " + std::string(j.type_name()));
}

}  // namespace studyforge
