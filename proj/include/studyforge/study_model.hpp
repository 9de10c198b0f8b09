#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "studyforge/scalar.hpp"

namespace studyforge {

/// Reserved column prefix marking per-row metadata in collected tables.
/// Parameter names must not start with it.
inline constexpr const char* kParamColumnPrefix = "PARAM_";

struct ParameterEntry {
  std::string name;
  std::vector<Scalar> values;

  bool operator==(const ParameterEntry&) const = default;
};

/// Ordered parameter declarations. Names are unique identifiers
/// ([A-Za-z_][A-Za-z0-9_]*) outside the reserved PARAM_ prefix; every value
/// list is non-empty.
struct ParameterSpace {
  std::vector<ParameterEntry> entries;

  bool operator==(const ParameterSpace&) const = default;
};

/// Parsed study definition file.
struct StudyDefinition {
  std::string study_name;
  ParameterSpace space;
  std::string command_template;
  std::string secondary_file = "secondary.csv";
  std::vector<std::string> primary_globs;
  /// Hand-picked extra vectors, appended after Cartesian expansion.
  std::vector<std::map<std::string, Scalar>> extra_cases;

  bool operator==(const StudyDefinition&) const = default;
};

/// One numbered case: the case id plus a full parameter vector (keys are
/// exactly the space's parameter names).
struct CaseRecord {
  std::int64_t case_id = 0;
  std::map<std::string, Scalar> vector;

  bool operator==(const CaseRecord&) const = default;
};

/// Expanded study: case ids are contiguous 0..n-1 in list order and no two
/// cases share a vector. `parameter_names` keeps the declaration order that
/// the keyed `CaseRecord::vector` maps cannot.
struct StudyPlan {
  std::string study_name;
  std::vector<std::string> parameter_names;
  std::vector<CaseRecord> cases;

  bool operator==(const StudyPlan&) const = default;
};

/// Parse a definition file (see docs/study-definition.md for the grammar).
/// Throws ParseError with line/column on syntax errors, reserved-prefix
/// parameter names, empty value lists, or unknown command placeholders.
StudyDefinition parse_study_definition(const std::string& text);

/// Re-check every StudyDefinition invariant on a programmatically built
/// value. parse_study_definition applies this before returning.
void validate_definition(const StudyDefinition& def);

/// Cartesian expansion, row-major over entries in declaration order (the
/// last-declared parameter varies fastest), extra cases appended. Case ids
/// are assigned 0,1,2,... in that order.
StudyPlan expand(const StudyDefinition& def);

/// Case map CSV: header `CASE_ID,<param names in declaration order>`, one
/// row per case, LF line endings, minimal quoting.
std::string write_case_map(const StudyPlan& plan);

/// Inverse of write_case_map. Errors on a missing CASE_ID header, ragged
/// rows, duplicate ids, and gaps (row k must carry id k). Scalar types are
/// re-inferred from cell text.
StudyPlan read_case_map(const std::string& text);

bool is_valid_parameter_name(std::string_view name);
bool is_valid_study_name(std::string_view name);

/// JSON persistence for a definition (materialized studies carry a
/// study.json so later collection/packaging steps know the command,
/// secondary file, and primary globs without the original file).
std::string definition_to_json(const StudyDefinition& def);
StudyDefinition definition_from_json(const std::string& text);

}  // namespace studyforge
