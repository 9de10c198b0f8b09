#include "studyforge/finding.hpp"

#include <algorithm>

namespace studyforge {

const char* to_string(Severity s) {
  return s == Severity::error ? "error" : "warning";
}

bool has_errors(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::error; });
}

}  // namespace studyforge
