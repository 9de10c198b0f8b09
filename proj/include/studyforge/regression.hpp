#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "studyforge/secondary_table.hpp"

namespace studyforge {

struct TolerancePair {
  double rel = 1e-6;
  double abs = 1e-12;
};

/// Tolerances for numeric comparison, with optional per-column overrides.
struct ToleranceSpec {
  TolerancePair defaults;
  bool nan_equal = false;
  std::map<std::string, TolerancePair> per_column;

  TolerancePair resolve(std::string_view column) const;
};

/// |a-b| <= abs + rel*max(|a|,|b|). NaNs are equal only with nan_equal;
/// infinities are equal only with matching sign.
bool values_close(double a, double b, const TolerancePair& tol, bool nan_equal = false);

enum class ComparisonStatus { pass, fail, structural_mismatch };

std::string to_string(ComparisonStatus s);

struct ColumnComparison {
  std::string column;
  double max_abs_dev = 0.0;
  double max_rel_dev = 0.0;
  std::optional<std::size_t> first_failing_row;  // 0-based data row
  std::vector<std::size_t> failing_rows;
};

struct ComparisonReport {
  ComparisonStatus status = ComparisonStatus::pass;
  std::vector<ColumnComparison> columns;
  std::vector<std::string> missing_columns;  // in reference, not in actual
  std::vector<std::string> extra_columns;    // in actual, not in reference
  std::int64_t row_count_delta = 0;          // actual rows - reference rows
  std::vector<std::string> structural_notes;

  bool passed() const { return status == ComparisonStatus::pass; }
  std::string to_json() const;
};

/// Compare an actual table against a reference. Structure differences
/// (column sets, row counts, duplicate keys) mark the report
/// structural_mismatch, but cells in the common region are still compared.
/// Numeric-parsing cell pairs use tolerances; text cells must match exactly.
/// With key_columns, rows are aligned by lexicographic key-text order instead
/// of position (throws Error when a key column is absent from either table).
ComparisonReport compare_tables(const SecondaryTable& actual,
                                const SecondaryTable& reference,
                                const ToleranceSpec& tol = {},
                                const std::vector<std::string>& key_columns = {});

}  // namespace studyforge
