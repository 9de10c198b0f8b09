#pragma once

namespace studyforge {

inline constexpr const char* kToolName = "studyforge";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace studyforge
