#include "studyforge/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "studyforge/error.hpp"

#include <json.hpp>

namespace studyforge {

TolerancePair ToleranceSpec::resolve(std::string_view column) const {
  auto it = per_column.find(std::string(column));
  return it == per_column.end() ? defaults : it->second;
}

bool values_close(double a, double b, const TolerancePair& tol, bool nan_equal) {
  if (std::isnan(a) || std::isnan(b)) {
    return nan_equal && std::isnan(a) && std::isnan(b);
  }
  if (std::isinf(a) || std::isinf(b)) {
    return a == b;  // equal only when both infinite with the same sign
  }
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) <= tol.abs + tol.rel * scale;
}

std::string to_string(ComparisonStatus s) {
  switch (s) {
    case ComparisonStatus::pass:
      return "pass";
    case ComparisonStatus::fail:
      return "fail";
    case ComparisonStatus::structural_mismatch:
      return "structural-mismatch";
  }
  return "unknown";
}

std::string ComparisonReport::to_json() const {
  nlohmann::ordered_json j;
  j["status"] = to_string(status);
  j["row_count_delta"] = row_count_delta;
  j["missing_columns"] = missing_columns;
  j["extra_columns"] = extra_columns;
  j["structural_notes"] = structural_notes;
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& col : columns) {
    nlohmann::ordered_json c;
    c["column"] = col.column;
    c["max_abs_dev"] = col.max_abs_dev;
    c["max_rel_dev"] = col.max_rel_dev;
    if (col.first_failing_row) {
      c["first_failing_row"] = *col.first_failing_row;
    }
    c["failing_rows"] = col.failing_rows;
    j["columns"].push_back(std::move(c));
  }
  return j.dump(2) + "\n";
}

namespace {

/// Row order used for comparison: positional, or sorted by key-cell texts.
std::vector<std::size_t> row_order(const SecondaryTable& t,
                                   const std::vector<std::size_t>& key_idx) {
  std::vector<std::size_t> order(t.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  if (key_idx.empty()) {
    return order;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t k : key_idx) {
      if (t.rows[a][k].text != t.rows[b][k].text) {
        return t.rows[a][k].text < t.rows[b][k].text;
      }
    }
    return false;
  });
  return order;
}

std::vector<std::string> key_of(const SecondaryTable& t, std::size_t row,
                                const std::vector<std::size_t>& key_idx) {
  std::vector<std::string> key;
  key.reserve(key_idx.size());
  for (std::size_t k : key_idx) {
    key.push_back(t.rows[row][k].text);
  }
  return key;
}

}  // namespace

ComparisonReport compare_tables(const SecondaryTable& actual, const SecondaryTable& reference,
                                const ToleranceSpec& tol,
                                const std::vector<std::string>& key_columns) {
  ComparisonReport report;

  std::vector<std::size_t> actual_keys;
  std::vector<std::size_t> reference_keys;
  for (const auto& k : key_columns) {
    auto ai = actual.column_index(k);
    auto ri = reference.column_index(k);
    if (!ai || !ri) {
      throw Error("key column '" + k + "' is missing from " +
                  (ai ? "the reference table" : "the actual table"));
    }
    actual_keys.push_back(*ai);
    reference_keys.push_back(*ri);
  }

  bool structural = false;

  for (const auto& col : reference.columns) {
    if (!actual.column_index(col)) {
      report.missing_columns.push_back(col);
    }
  }
  for (const auto& col : actual.columns) {
    if (!reference.column_index(col)) {
      report.extra_columns.push_back(col);
    }
  }
  if (!report.missing_columns.empty() || !report.extra_columns.empty()) {
    structural = true;
    report.structural_notes.push_back("column sets differ");
  }

  report.row_count_delta = static_cast<std::int64_t>(actual.rows.size()) -
                           static_cast<std::int64_t>(reference.rows.size());
  if (report.row_count_delta != 0) {
    structural = true;
    report.structural_notes.push_back("row counts differ");
  }

  auto actual_order = row_order(actual, actual_keys);
  auto reference_order = row_order(reference, reference_keys);

  if (!key_columns.empty()) {
    auto duplicated = [&](const SecondaryTable& t, const std::vector<std::size_t>& keys,
                          const std::vector<std::size_t>& order) {
      for (std::size_t i = 1; i < order.size(); ++i) {
        if (key_of(t, order[i - 1], keys) == key_of(t, order[i], keys)) {
          return true;
        }
      }
      return false;
    };
    if (duplicated(actual, actual_keys, actual_order) ||
        duplicated(reference, reference_keys, reference_order)) {
      structural = true;
      report.structural_notes.push_back("duplicate key tuples");
    }
  }

  // Compare the common region: shared columns over positionally (or
  // key-order) aligned row pairs.
  const std::size_t shared_rows = std::min(actual.rows.size(), reference.rows.size());
  bool any_cell_failed = false;

  for (const auto& col : reference.columns) {
    auto ai = actual.column_index(col);
    auto ri = reference.column_index(col);
    if (!ai || !ri) {
      continue;
    }
    ColumnComparison cc;
    cc.column = col;
    const TolerancePair pair = tol.resolve(col);
    for (std::size_t r = 0; r < shared_rows; ++r) {
      const Cell& a = actual.rows[actual_order[r]][*ai];
      const Cell& b = reference.rows[reference_order[r]][*ri];
      bool ok;
      if (a.number && b.number) {
        ok = values_close(*a.number, *b.number, pair, tol.nan_equal);
        const double abs_dev = std::fabs(*a.number - *b.number);
        const double scale = std::max(std::fabs(*a.number), std::fabs(*b.number));
        if (!std::isnan(abs_dev)) {
          cc.max_abs_dev = std::max(cc.max_abs_dev, abs_dev);
          if (scale > 0) {
            cc.max_rel_dev = std::max(cc.max_rel_dev, abs_dev / scale);
          }
        }
      } else {
        ok = a.text == b.text;
      }
      if (!ok) {
        if (!cc.first_failing_row) {
          cc.first_failing_row = r;
        }
        cc.failing_rows.push_back(r);
        any_cell_failed = true;
      }
    }
    report.columns.push_back(std::move(cc));
  }

  if (structural) {
    report.status = ComparisonStatus::structural_mismatch;
  } else if (any_cell_failed) {
    report.status = ComparisonStatus::fail;
  } else {
    report.status = ComparisonStatus::pass;
  }
  return report;
}

}  // namespace studyforge
