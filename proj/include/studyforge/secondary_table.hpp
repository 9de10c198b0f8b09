#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "studyforge/finding.hpp"
#include "studyforge/study_model.hpp"

namespace studyforge {

/// One table cell: the original text plus, when the whole text parses as a
/// floating-point value, its numeric reading. The text is the identity; it
/// is preserved verbatim through read-modify-write cycles.
struct Cell {
  std::string text;
  std::optional<double> number;

  static Cell of(std::string text);

  bool operator==(const Cell& other) const { return text == other.text; }
};

/// Rectangular table whose PARAM_-prefixed columns carry per-row metadata
/// and whose remaining columns carry data. Column names are unique and
/// non-empty; no two rows are fully identical.
struct SecondaryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
  std::vector<std::size_t> metadata_column_indexes() const;
  std::vector<std::size_t> data_column_indexes() const;

  bool operator==(const SecondaryTable&) const = default;
};

bool is_metadata_column(std::string_view name);

/// Parse a secondary-data CSV. Numeric parse is attempted per cell. Throws
/// ParseError on ragged rows (with line number), duplicate or empty column
/// names, and fully duplicate rows.
SecondaryTable read_table(const std::string& text);

/// Canonical CSV form: header + rows, LF endings, minimal quoting. Cell text
/// is written verbatim, so write ∘ read ∘ write is byte-stable.
std::string write_table(const SecondaryTable& t);

/// Interoperability lint: duplicate full rows are errors; missing PARAM_
/// columns, missing data columns, and mixed numeric/text columns are
/// warnings.
std::vector<Finding> validate_table(const SecondaryTable& t);

/// Merge per-case tables into one: PARAM_<name> columns (declaration order)
/// carry each case's vector, duplicated into every row the case contributed;
/// data columns follow. Cases are emitted in id order; cases absent from the
/// map contribute nothing. With include_case_id_column, a leading
/// PARAM_CASE_ID column is added.
SecondaryTable collect(const StudyPlan& plan,
                       const std::map<std::int64_t, SecondaryTable>& per_case_tables,
                       bool include_case_id_column = false);

struct MetadataGroup {
  std::vector<std::string> key;  // metadata cell texts, column order
  SecondaryTable table;
};

/// Partition rows by their full metadata tuple; group order is first
/// occurrence, row order within groups is preserved.
std::vector<MetadataGroup> group_by_metadata(const SecondaryTable& t);

/// Rows where every (column, value) pair matches: numerically when both the
/// cell and the value parse as numbers, textually otherwise. The column set
/// is unchanged. Throws Error on unknown columns.
SecondaryTable filter_rows(const SecondaryTable& t,
                           const std::vector<std::pair<std::string, std::string>>& predicate);

struct ColumnGroup {
  std::string value;
  std::vector<std::size_t> row_indexes;
};

/// Distinct values of one column in first-occurrence order.
std::vector<ColumnGroup> group_by_column(const SecondaryTable& t, std::string_view column);

}  // namespace studyforge
