#include "studyforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "studyforge/error.hpp"

namespace studyforge {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 60;
constexpr int kRight = 620;
constexpr int kTop = 30;
constexpr int kBottom = 360;
constexpr int kTicks = 5;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Axis {
  double min = 0.0;
  double max = 1.0;

  void fit(double v) {
    min = std::min(min, v);
    max = std::max(max, v);
  }

  double place(double v, double lo, double hi) const {
    return lo + (v - min) / (max - min) * (hi - lo);
  }
};

std::size_t numeric_data_column(const SecondaryTable& t, const std::string& name,
                                const char* role) {
  auto idx = t.column_index(name);
  if (!idx) {
    throw Error(std::string(role) + " column '" + name + "' not found");
  }
  if (is_metadata_column(name)) {
    throw Error(std::string(role) + " column '" + name + "' is metadata, not data");
  }
  for (const auto& row : t.rows) {
    if (!row[*idx].number) {
      throw Error(std::string(role) + " column '" + name + "' has non-numeric cell '" +
                  row[*idx].text + "'");
    }
  }
  return *idx;
}

}  // namespace

std::string render_chart_svg(const SecondaryTable& t, const ChartSpec& spec) {
  const std::size_t xi = numeric_data_column(t, spec.x_column, "x");
  const std::size_t yi = numeric_data_column(t, spec.y_column, "y");

  std::vector<ColumnGroup> groups;
  if (spec.group_by) {
    if (!is_metadata_column(*spec.group_by)) {
      throw Error("group_by column '" + *spec.group_by + "' is not a PARAM_ column");
    }
    groups = group_by_column(t, *spec.group_by);
  } else if (!t.rows.empty()) {
    ColumnGroup all;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      all.row_indexes.push_back(r);
    }
    groups.push_back(std::move(all));
  }

  Axis x;
  Axis y;
  if (!t.rows.empty()) {
    x.min = x.max = *t.rows[0][xi].number;
    y.min = y.max = *t.rows[0][yi].number;
    for (const auto& row : t.rows) {
      x.fit(*row[xi].number);
      y.fit(*row[yi].number);
    }
  }
  if (x.max == x.min) {
    x.min -= 1.0;
    x.max += 1.0;
  }
  if (y.max == y.min) {
    y.min -= 1.0;
    y.max += 1.0;
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" role=\"img\">\n";
  svg << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << (kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << html_escape(spec.title)
      << "</text>\n";

  // Axes.
  svg << "  <line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";

  // Ticks and labels.
  for (int i = 0; i < kTicks; ++i) {
    const double fraction = static_cast<double>(i) / (kTicks - 1);
    const double xv = x.min + fraction * (x.max - x.min);
    const double yv = y.min + fraction * (y.max - y.min);
    const double xp = kLeft + fraction * (kRight - kLeft);
    const double yp = kBottom - fraction * (kBottom - kTop);
    svg << "  <line x1=\"" << fmt("%.2f", xp) << "\" y1=\"" << kBottom << "\" x2=\""
        << fmt("%.2f", xp) << "\" y2=\"" << (kBottom + 5) << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << fmt("%.2f", xp) << "\" y=\"" << (kBottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt("%.4g", xv) << "</text>\n";
    svg << "  <line x1=\"" << (kLeft - 5) << "\" y1=\"" << fmt("%.2f", yp) << "\" x2=\"" << kLeft
        << "\" y2=\"" << fmt("%.2f", yp) << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << (kLeft - 8) << "\" y=\"" << fmt("%.2f", yp + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt("%.4g", yv) << "</text>\n";
  }

  // Axis names.
  svg << "  <text x=\"" << ((kLeft + kRight) / 2) << "\" y=\"" << (kHeight - 6)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << html_escape(spec.x_column) << "</text>\n";
  svg << "  <text x=\"14\" y=\"" << ((kTop + kBottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 14 " << ((kTop + kBottom) / 2) << ")\">"
      << html_escape(spec.y_column) << "</text>\n";

  // One polyline per group, plus a legend entry when grouping.
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const char* color = kPalette[g % kPaletteSize];
    svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t r : groups[g].row_indexes) {
      const double xp = x.place(*t.rows[r][xi].number, kLeft, kRight);
      const double yp = y.place(*t.rows[r][yi].number, kBottom, kTop);
      if (!first) {
        svg << " ";
      }
      svg << fmt("%.2f", xp) << "," << fmt("%.2f", yp);
      first = false;
    }
    svg << "\"/>\n";
    if (spec.group_by) {
      const int ly = kTop + 14 + static_cast<int>(g) * 16;
      svg << "  <rect x=\"" << (kRight - 150) << "\" y=\"" << (ly - 9)
          << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
      svg << "  <text x=\"" << (kRight - 136) << "\" y=\"" << ly
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << html_escape(*spec.group_by)
          << " = " << html_escape(groups[g].value) << "</text>\n";
    }
  }

  svg << "</svg>\n";
  return svg.str();
}

namespace {

void append_table(std::ostringstream& html, const SecondaryTable& t) {
  html << "<table>\n<thead><tr>";
  for (const auto& col : t.columns) {
    html << "<th>" << html_escape(col) << "</th>";
  }
  html << "</tr></thead>\n<tbody>\n";
  for (const auto& row : t.rows) {
    html << "<tr>";
    for (const auto& cell : row) {
      html << "<td>" << html_escape(cell.text) << "</td>";
    }
    html << "</tr>\n";
  }
  html << "</tbody>\n</table>\n";
}

const char* kStyle = R"(
body { font-family: sans-serif; margin: 2rem auto; max-width: 60rem; color: #222; }
h1, h2 { font-weight: 600; }
table { border-collapse: collapse; margin: 0.75rem 0; }
th, td { border: 1px solid #bbb; padding: 0.25rem 0.6rem; text-align: left; }
th { background: #f0f0f0; }
.counts span { margin-right: 1.2rem; }
.verdict { font-size: 1.4rem; font-weight: 700; padding: 0.4rem 0; }
.verdict.ok { color: #1a7f37; }
.verdict.bad { color: #b91c1c; }
.note { color: #555; }
)";

}  // namespace

std::string render_study_html(const StudyPlan& plan, const RunReport& run_report,
                              const SecondaryTable& collected,
                              const ComparisonReport* comparison,
                              const std::vector<ChartSpec>& charts) {
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>"
       << html_escape(plan.study_name) << "</title>\n<style>" << kStyle
       << "</style>\n</head>\n<body>\n";
  html << "<h1>Study " << html_escape(plan.study_name) << "</h1>\n";

  html << "<p class=\"counts\">";
  html << "<span>cases: " << plan.cases.size() << "</span>";
  html << "<span>succeeded: " << run_report.count(CaseStatus::succeeded) << "</span>";
  html << "<span>failed: " << run_report.count(CaseStatus::failed) << "</span>";
  html << "<span>stopped: " << run_report.count(CaseStatus::stopped) << "</span>";
  html << "<span>pending: " << run_report.count(CaseStatus::pending) << "</span>";
  html << "</p>\n";

  html << "<h2>Cases</h2>\n<table>\n<thead><tr><th>case</th>";
  for (const auto& name : plan.parameter_names) {
    html << "<th>" << html_escape(name) << "</th>";
  }
  html << "<th>status</th><th>exit</th><th>wall [s]</th></tr></thead>\n<tbody>\n";
  for (const auto& c : plan.cases) {
    html << "<tr><td>" << c.case_id << "</td>";
    for (const auto& name : plan.parameter_names) {
      html << "<td>" << html_escape(c.vector.at(name).render()) << "</td>";
    }
    const CaseResult* result = nullptr;
    for (const auto& r : run_report.cases) {
      if (r.case_id == c.case_id) {
        result = &r;
        break;
      }
    }
    if (result != nullptr) {
      html << "<td>" << to_string(result->status) << "</td>";
      html << "<td>" << (result->exit_code ? std::to_string(*result->exit_code) : "") << "</td>";
      html << "<td>" << (result->wall_seconds ? fmt("%.3f", *result->wall_seconds) : "")
           << "</td>";
    } else {
      html << "<td>pending</td><td></td><td></td>";
    }
    html << "</tr>\n";
  }
  html << "</tbody>\n</table>\n";

  if (comparison != nullptr) {
    html << "<h2>Regression check</h2>\n";
    if (comparison->status == ComparisonStatus::pass) {
      html << "<p class=\"verdict ok\">PASS</p>\n";
    } else if (comparison->status == ComparisonStatus::fail) {
      html << "<p class=\"verdict bad\">FAIL</p>\n";
    } else {
      html << "<p class=\"verdict bad\">STRUCTURAL MISMATCH</p>\n";
    }
    for (const auto& note : comparison->structural_notes) {
      html << "<p class=\"note\">" << html_escape(note) << "</p>\n";
    }
    if (!comparison->columns.empty()) {
      html << "<table>\n<thead><tr><th>column</th><th>max abs dev</th><th>max rel dev</th>"
           << "<th>failing rows</th></tr></thead>\n<tbody>\n";
      for (const auto& col : comparison->columns) {
        html << "<tr><td>" << html_escape(col.column) << "</td><td>"
             << fmt("%.6g", col.max_abs_dev) << "</td><td>" << fmt("%.6g", col.max_rel_dev)
             << "</td><td>" << col.failing_rows.size() << "</td></tr>\n";
      }
      html << "</tbody>\n</table>\n";
    }
  }

  html << "<h2>Secondary data</h2>\n";
  append_table(html, collected);

  for (const auto& spec : charts) {
    html << "<h2>" << html_escape(spec.title) << "</h2>\n";
    html << render_chart_svg(collected, spec);
  }

  html << "</body>\n</html>\n";
  return html.str();
}

std::string render_index_html(const std::vector<IndexEntry>& entries) {
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
       << "<title>Studies</title>\n<style>" << kStyle << "</style>\n</head>\n<body>\n"
       << "<h1>Studies</h1>\n<ul>\n";
  for (const auto& e : entries) {
    html << "<li><a href=\"" << html_escape(e.href) << "\">" << html_escape(e.study_name)
         << "</a>";
    if (!e.summary.empty()) {
      html << " — " << html_escape(e.summary);
    }
    html << "</li>\n";
  }
  html << "</ul>\n</body>\n</html>\n";
  return html.str();
}

}  // namespace studyforge
