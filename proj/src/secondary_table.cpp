#include "studyforge/secondary_table.hpp"

#include <algorithm>
#include <set>

#include "studyforge/csv.hpp"
#include "studyforge/error.hpp"

namespace studyforge {

Cell Cell::of(std::string text) {
  Cell c;
  double d = 0.0;
  if (parse_double(text, d)) {
    c.number = d;
  }
  c.text = std::move(text);
  return c;
}

bool is_metadata_column(std::string_view name) {
  return name.substr(0, std::string_view(kParamColumnPrefix).size()) == kParamColumnPrefix;
}

std::optional<std::size_t> SecondaryTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> SecondaryTable::metadata_column_indexes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (is_metadata_column(columns[i])) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::size_t> SecondaryTable::data_column_indexes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!is_metadata_column(columns[i])) {
      out.push_back(i);
    }
  }
  return out;
}

namespace {

std::vector<std::string> row_texts(const std::vector<Cell>& row) {
  std::vector<std::string> out;
  out.reserve(row.size());
  for (const auto& c : row) {
    out.push_back(c.text);
  }
  return out;
}

void check_structure(const SecondaryTable& t) {
  std::set<std::string> names;
  for (const auto& col : t.columns) {
    if (col.empty()) {
      throw ParseError("empty column name");
    }
    if (!names.insert(col).second) {
      throw ParseError("duplicate column '" + col + "'");
    }
  }
  std::set<std::vector<std::string>> rows;
  for (const auto& row : t.rows) {
    if (!rows.insert(row_texts(row)).second) {
      throw ParseError("fully duplicate row");
    }
  }
}

}  // namespace

SecondaryTable read_table(const std::string& text) {
  auto records = csv::parse(text);
  if (records.empty()) {
    throw ParseError("table is empty; a header row is required");
  }
  SecondaryTable t;
  t.columns = records[0].cells;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.cells.size() != t.columns.size()) {
      throw ParseError("row has " + std::to_string(rec.cells.size()) + " cells, header has " +
                           std::to_string(t.columns.size()),
                       rec.line);
    }
    std::vector<Cell> row;
    row.reserve(rec.cells.size());
    for (const auto& cell : rec.cells) {
      row.push_back(Cell::of(cell));
    }
    t.rows.push_back(std::move(row));
  }
  check_structure(t);
  return t;
}

std::string write_table(const SecondaryTable& t) {
  std::string out = csv::write_row(t.columns);
  for (const auto& row : t.rows) {
    out += csv::write_row(row_texts(row));
  }
  return out;
}

std::vector<Finding> validate_table(const SecondaryTable& t) {
  std::vector<Finding> findings;

  std::set<std::string> names;
  for (const auto& col : t.columns) {
    if (col.empty()) {
      findings.push_back({Severity::error, "empty-column-name", "a column has an empty name"});
    } else if (!names.insert(col).second) {
      findings.push_back(
          {Severity::error, "duplicate-column", "column '" + col + "' appears more than once"});
    }
  }

  std::set<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!rows.insert(row_texts(t.rows[r])).second) {
      findings.push_back({Severity::error, "duplicate-row",
                          "row " + std::to_string(r) + " fully duplicates an earlier row"});
    }
  }

  if (t.metadata_column_indexes().empty()) {
    findings.push_back({Severity::warning, "no-metadata-columns",
                        "no PARAM_ column: rows carry no provenance metadata"});
  }
  if (t.data_column_indexes().empty()) {
    findings.push_back(
        {Severity::warning, "no-data-columns", "every column is metadata; the table has no data"});
  }

  for (std::size_t i : t.data_column_indexes()) {
    bool numeric = false;
    bool text = false;
    for (const auto& row : t.rows) {
      (row[i].number ? numeric : text) = true;
    }
    if (numeric && text) {
      findings.push_back({Severity::warning, "mixed-column",
                          "data column '" + t.columns[i] +
                              "' mixes numeric and non-numeric cells"});
    }
  }
  return findings;
}

SecondaryTable collect(const StudyPlan& plan,
                       const std::map<std::int64_t, SecondaryTable>& per_case_tables,
                       bool include_case_id_column) {
  if (per_case_tables.empty()) {
    throw Error("nothing to collect: no case produced a table");
  }
  std::set<std::int64_t> known;
  for (const auto& c : plan.cases) {
    known.insert(c.case_id);
  }
  for (const auto& [id, table] : per_case_tables) {
    (void)table;
    if (known.find(id) == known.end()) {
      throw Error("case id " + std::to_string(id) + " is not in the plan");
    }
  }

  // Every case must contribute an identical data-column header, free of
  // metadata columns.
  const std::vector<std::string>* data_columns = nullptr;
  std::int64_t first_case = 0;
  for (const auto& c : plan.cases) {
    auto it = per_case_tables.find(c.case_id);
    if (it == per_case_tables.end()) {
      continue;
    }
    for (const auto& col : it->second.columns) {
      if (is_metadata_column(col)) {
        throw Error("case " + std::to_string(c.case_id) +
                    " table already contains metadata column '" + col + "'");
      }
    }
    if (data_columns == nullptr) {
      data_columns = &it->second.columns;
      first_case = c.case_id;
    } else if (it->second.columns != *data_columns) {
      throw Error("case " + std::to_string(c.case_id) +
                  " table header differs from case " + std::to_string(first_case) + "'s");
    }
  }

  // Column layout: [PARAM_CASE_ID,] PARAM_<name>..., then the shared data
  // columns.
  SecondaryTable merged;
  if (include_case_id_column) {
    merged.columns.push_back(std::string(kParamColumnPrefix) + "CASE_ID");
  }
  for (const auto& name : plan.parameter_names) {
    merged.columns.push_back(kParamColumnPrefix + name);
  }
  merged.columns.insert(merged.columns.end(), data_columns->begin(), data_columns->end());

  for (const auto& c : plan.cases) {
    auto it = per_case_tables.find(c.case_id);
    if (it == per_case_tables.end()) {
      continue;
    }
    const SecondaryTable& src = it->second;
    for (const auto& src_row : src.rows) {
      std::vector<Cell> row;
      row.reserve(merged.columns.size());
      if (include_case_id_column) {
        row.push_back(Cell::of(std::to_string(c.case_id)));
      }
      for (const auto& name : plan.parameter_names) {
        row.push_back(Cell::of(c.vector.at(name).render()));
      }
      row.insert(row.end(), src_row.begin(), src_row.end());
      merged.rows.push_back(std::move(row));
    }
  }
  return merged;
}

std::vector<MetadataGroup> group_by_metadata(const SecondaryTable& t) {
  const auto meta = t.metadata_column_indexes();
  std::vector<MetadataGroup> groups;
  for (const auto& row : t.rows) {
    std::vector<std::string> key;
    key.reserve(meta.size());
    for (std::size_t i : meta) {
      key.push_back(row[i].text);
    }
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const MetadataGroup& g) { return g.key == key; });
    if (it == groups.end()) {
      groups.push_back({key, SecondaryTable{t.columns, {}}});
      it = std::prev(groups.end());
    }
    it->table.rows.push_back(row);
  }
  return groups;
}

SecondaryTable filter_rows(const SecondaryTable& t,
                           const std::vector<std::pair<std::string, std::string>>& predicate) {
  std::vector<std::pair<std::size_t, std::string>> checks;
  for (const auto& [col, value] : predicate) {
    auto idx = t.column_index(col);
    if (!idx) {
      throw Error("unknown column '" + col + "'");
    }
    checks.emplace_back(*idx, value);
  }
  SecondaryTable out{t.columns, {}};
  for (const auto& row : t.rows) {
    bool keep = true;
    for (const auto& [idx, value] : checks) {
      const Cell& cell = row[idx];
      double wanted = 0.0;
      if (cell.number && parse_double(value, wanted)) {
        if (!(*cell.number == wanted)) {
          keep = false;
          break;
        }
      } else if (cell.text != value) {
        keep = false;
        break;
      }
    }
    if (keep) {
      out.rows.push_back(row);
    }
  }
  return out;
}

std::vector<ColumnGroup> group_by_column(const SecondaryTable& t, std::string_view column) {
  auto idx = t.column_index(column);
  if (!idx) {
    throw Error("unknown column '" + std::string(column) + "'");
  }
  std::vector<ColumnGroup> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& value = t.rows[r][*idx].text;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const ColumnGroup& g) { return g.value == value; });
    if (it == groups.end()) {
      groups.push_back({value, {}});
      it = std::prev(groups.end());
    }
    it->row_indexes.push_back(r);
  }
  return groups;
}

}  // namespace studyforge
