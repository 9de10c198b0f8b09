#pragma once

#include <string>
#include <vector>

namespace studyforge {

enum class Severity { warning, error };

const char* to_string(Severity s);

/// One validation result. `code` is a short machine-readable identifier,
/// `message` explains the finding for humans.
struct Finding {
  Severity severity = Severity::warning;
  std::string code;
  std::string message;
};

bool has_errors(const std::vector<Finding>& findings);

}  // namespace studyforge
