#pragma once

#include <optional>
#include <string>
#include <vector>

#include "studyforge/regression.hpp"
#include "studyforge/runner.hpp"
#include "studyforge/secondary_table.hpp"
#include "studyforge/study_model.hpp"

namespace studyforge {

/// One line chart: y over x, optionally split into one series per distinct
/// value of a metadata column. x and y must name numeric data columns;
/// group_by must name a PARAM_ column.
struct ChartSpec {
  std::string x_column;
  std::string y_column;
  std::optional<std::string> group_by;
  std::string title;
};

/// Render a standalone SVG line chart from the table. Throws Error when a
/// referenced column is missing or of the wrong kind.
std::string render_chart_svg(const SecondaryTable& t, const ChartSpec& spec);

/// Self-contained HTML study report: run summary, parameter space, collected
/// table, optional regression verdict, and inline SVG charts. No external
/// resources.
std::string render_study_html(const StudyPlan& plan, const RunReport& run_report,
                              const SecondaryTable& collected,
                              const ComparisonReport* comparison,
                              const std::vector<ChartSpec>& charts);

struct IndexEntry {
  std::string study_name;
  std::string href;  // relative link to the study report
  std::string summary;
};

/// Landing page linking per-study reports with relative hrefs.
std::string render_index_html(const std::vector<IndexEntry>& entries);

}  // namespace studyforge
