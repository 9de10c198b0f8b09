// studyforge — single executable front door for the study workflow toolkit.
//
// Subcommands: plan, run, stop, status, collect, validate, compare,
// link (add|mesh|check|render|readme|tag|new-version), lint-recipe,
// metadata, pack (secondary|primary), report.
//
// Exit codes: 0 success/pass; 1 domain failure (comparison fail, findings
// with errors); 2 usage/input error; 3 execution failure (>=1 case failed).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "studyforge/crosslink.hpp"
#include "studyforge/error.hpp"
#include "studyforge/finding.hpp"
#include "studyforge/packaging.hpp"
#include "studyforge/recipe_lint.hpp"
#include "studyforge/regression.hpp"
#include "studyforge/report.hpp"
#include "studyforge/runner.hpp"
#include "studyforge/secondary_table.hpp"
#include "studyforge/study_model.hpp"
#include "studyforge/version.hpp"

namespace fs = std::filesystem;
namespace sf = studyforge;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;
constexpr int kExecutionFailure = 3;

std::string default_root() {
  const char* env = std::getenv("STUDYFORGE_ROOT");
  return (env != nullptr && *env != '\0') ? std::string(env) : std::string(".");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw sf::Error("cannot read '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw sf::Error("cannot write '" + path.string() + "'");
  }
  out << contents;
  out.flush();
  if (!out) {
    throw sf::Error("write to '" + path.string() + "' failed");
  }
}

struct LoadedStudy {
  fs::path study_dir;
  sf::StudyDefinition def;
  sf::StudyPlan plan;
};

LoadedStudy load_study(const fs::path& root, const std::string& study) {
  LoadedStudy s;
  s.study_dir = root / study;
  if (!fs::is_directory(s.study_dir)) {
    throw sf::Error("no study '" + study + "' under '" + root.string() +
                    "' (run `studyforge plan` first)");
  }
  s.def = sf::definition_from_json(read_file(s.study_dir / "study.json"));
  s.plan = sf::read_case_map(read_file(s.study_dir / "case_map.csv"));
  s.plan.study_name = s.def.study_name;
  return s;
}

// ---------------------------------------------------------------- output --

ordered_json run_report_json(const sf::RunReport& report) {
  ordered_json j;
  j["study"] = report.study_name;
  j["cases"] = ordered_json::array();
  for (const auto& c : report.cases) {
    ordered_json e;
    e["case_id"] = c.case_id;
    e["status"] = sf::to_string(c.status);
    if (c.exit_code) {
      e["exit_code"] = *c.exit_code;
    }
    if (c.wall_seconds) {
      e["wall_seconds"] = *c.wall_seconds;
    }
    if (!c.note.empty()) {
      e["note"] = c.note;
    }
    j["cases"].push_back(std::move(e));
  }
  ordered_json counts;
  counts["pending"] = report.count(sf::CaseStatus::pending);
  counts["running"] = report.count(sf::CaseStatus::running);
  counts["succeeded"] = report.count(sf::CaseStatus::succeeded);
  counts["failed"] = report.count(sf::CaseStatus::failed);
  counts["stopped"] = report.count(sf::CaseStatus::stopped);
  j["counts"] = std::move(counts);
  return j;
}

void print_run_report_text(const sf::RunReport& report, std::ostream& out) {
  for (const auto& c : report.cases) {
    out << "case " << c.case_id << ": " << sf::to_string(c.status);
    if (c.exit_code) {
      out << " (exit " << *c.exit_code << ")";
    }
    if (!c.note.empty()) {
      out << " — " << c.note;
    }
    out << "\n";
  }
  out << report.cases.size() << " cases: " << report.count(sf::CaseStatus::succeeded)
      << " succeeded, " << report.count(sf::CaseStatus::failed) << " failed, "
      << report.count(sf::CaseStatus::stopped) << " stopped, "
      << report.count(sf::CaseStatus::running) << " running, "
      << report.count(sf::CaseStatus::pending) << " pending\n";
}

ordered_json findings_json(const std::vector<sf::Finding>& findings) {
  ordered_json j;
  j["findings"] = ordered_json::array();
  std::size_t errors = 0;
  std::size_t warnings = 0;
  for (const auto& f : findings) {
    j["findings"].push_back({{"severity", sf::to_string(f.severity)},
                             {"code", f.code},
                             {"message", f.message}});
    (f.severity == sf::Severity::error ? errors : warnings)++;
  }
  j["errors"] = errors;
  j["warnings"] = warnings;
  return j;
}

void print_findings_text(const std::vector<sf::Finding>& findings, std::ostream& out) {
  for (const auto& f : findings) {
    out << sf::to_string(f.severity) << " [" << f.code << "]: " << f.message << "\n";
  }
}

// ----------------------------------------------------------------- charts --

sf::ChartSpec parse_chart_spec(const std::string& text) {
  sf::ChartSpec spec;
  std::istringstream in(text);
  std::string segment;
  while (std::getline(in, segment, ',')) {
    const auto eq = segment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw sf::Error("chart spec segment '" + segment +
                      "' is not key=value (expected y=COL,x=COL[,group=COL][,title=TEXT])");
    }
    const std::string key = segment.substr(0, eq);
    const std::string value = segment.substr(eq + 1);
    if (key == "x") {
      spec.x_column = value;
    } else if (key == "y") {
      spec.y_column = value;
    } else if (key == "group") {
      spec.group_by = value;
    } else if (key == "title") {
      spec.title = value;
    } else {
      throw sf::Error("unknown chart spec key '" + key + "' (use x, y, group, title)");
    }
  }
  if (spec.x_column.empty() || spec.y_column.empty()) {
    throw sf::Error("chart spec '" + text + "' must name both x= and y= columns");
  }
  if (spec.title.empty()) {
    spec.title = spec.y_column + " vs " + spec.x_column;
    if (spec.group_by) {
      spec.title += " by " + *spec.group_by;
    }
  }
  return spec;
}

// ------------------------------------------------------------ subcommands --

struct PlanArgs {
  std::string definition;
  std::string root = default_root();
  bool force = false;
  std::string format = "text";
};

int cmd_plan(const PlanArgs& a) {
  const auto def = sf::parse_study_definition(read_file(a.definition));
  const auto plan = sf::expand(def);
  const auto study_dir = sf::materialize(plan, def, a.root, a.force);
  if (a.format == "json") {
    ordered_json j;
    j["study"] = plan.study_name;
    j["case_count"] = plan.cases.size();
    j["parameters"] = plan.parameter_names;
    j["study_dir"] = study_dir.string();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "planned study '" << plan.study_name << "': " << plan.cases.size()
              << " cases under " << study_dir.string() << "\n";
  }
  return kOk;
}

struct RunArgs {
  std::string study;
  std::string root = default_root();
  int max_parallel = 1;
  std::vector<std::string> env_passthrough;
  std::string submit_wrapper;
  std::string format = "text";
};

int cmd_run(const RunArgs& a) {
  const auto s = load_study(a.root, a.study);
  sf::ExecutorConfig cfg;
  cfg.root = a.root;
  cfg.max_parallel = a.max_parallel;
  cfg.env_passthrough = a.env_passthrough;
  if (!a.submit_wrapper.empty()) {
    cfg.submit_wrapper = a.submit_wrapper;
  }
  const auto report = sf::run(s.plan, s.def, cfg);
  // The report is persisted even when cases fail (exit 3): failure of a
  // case is a result, not an error of the run itself.
  write_file(s.study_dir / "run_report.json", run_report_json(report).dump(2) + "\n");
  if (a.format == "json") {
    std::cout << run_report_json(report).dump(2) << "\n";
  } else {
    print_run_report_text(report, std::cout);
  }
  return report.count(sf::CaseStatus::failed) > 0 ? kExecutionFailure : kOk;
}

struct StudyArgs {
  std::string study;
  std::string root = default_root();
  std::string format = "text";
  bool clear = false;
};

int cmd_stop(const StudyArgs& a) {
  const fs::path study_dir = fs::path(a.root) / a.study;
  if (a.clear) {
    sf::clear_stop(study_dir);
    std::cout << "stop marker cleared for study '" << a.study << "'\n";
    return kOk;
  }
  sf::request_stop(study_dir);
  std::cout << "stop requested for study '" << a.study
            << "'; running cases finish, pending cases will be marked stopped\n";
  return kOk;
}

int cmd_status(const StudyArgs& a) {
  const auto report = sf::status(fs::path(a.root) / a.study);
  if (a.format == "json") {
    std::cout << run_report_json(report).dump(2) << "\n";
  } else {
    print_run_report_text(report, std::cout);
  }
  return kOk;
}

struct CollectArgs {
  std::string study;
  std::string root = default_root();
  std::string out;  // default <study_dir>/secondary.csv
  bool include_case_id = false;
  std::string format = "text";
};

int cmd_collect(const CollectArgs& a) {
  const auto s = load_study(a.root, a.study);
  std::map<std::int64_t, sf::SecondaryTable> tables;
  std::vector<std::int64_t> missing;
  for (const auto& c : s.plan.cases) {
    const auto path = s.study_dir / std::to_string(c.case_id) / s.def.secondary_file;
    if (fs::exists(path)) {
      try {
        tables.emplace(c.case_id, sf::read_table(read_file(path)));
      } catch (const sf::Error& e) {
        throw sf::Error("case " + std::to_string(c.case_id) + " " + s.def.secondary_file +
                        ": " + e.what());
      }
    } else {
      missing.push_back(c.case_id);
    }
  }
  if (tables.empty()) {
    throw sf::Error("no case of study '" + a.study + "' produced " + s.def.secondary_file);
  }
  const auto merged = sf::collect(s.plan, tables, a.include_case_id);
  const fs::path out =
      a.out.empty() ? s.study_dir / "secondary.csv" : fs::path(a.out);
  write_file(out, sf::write_table(merged));
  for (const auto id : missing) {
    std::cerr << "warning: case " << id << " has no " << s.def.secondary_file
              << "; collected without it\n";
  }
  if (a.format == "json") {
    ordered_json j;
    j["study"] = s.plan.study_name;
    j["rows"] = merged.rows.size();
    j["columns"] = merged.columns;
    j["collected_cases"] = tables.size();
    j["missing_cases"] = missing;
    j["out"] = out.string();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "collected " << merged.rows.size() << " rows from " << tables.size() << " of "
              << s.plan.cases.size() << " cases into " << out.string() << "\n";
  }
  return kOk;
}

struct ValidateArgs {
  std::string table;
  std::string format = "text";
};

int cmd_validate(const ValidateArgs& a) {
  const auto table = sf::read_table(read_file(a.table));
  const auto findings = sf::validate_table(table);
  if (a.format == "json") {
    auto j = findings_json(findings);
    j["table"] = a.table;
    std::cout << j.dump(2) << "\n";
  } else {
    print_findings_text(findings, std::cout);
    std::cout << a.table << ": " << findings.size() << " finding(s)\n";
  }
  return sf::has_errors(findings) ? kDomainFailure : kOk;
}

struct CompareArgs {
  std::string reference;
  std::string actual;
  double rel = 1e-6;
  double abs = 1e-12;
  bool nan_equal = false;
  std::string key;  // comma-separated key columns
  std::string report_path;
  std::string format = "text";
};

int cmd_compare(const CompareArgs& a) {
  const auto reference = sf::read_table(read_file(a.reference));
  const auto actual = sf::read_table(read_file(a.actual));
  sf::ToleranceSpec tol;
  tol.defaults.rel = a.rel;
  tol.defaults.abs = a.abs;
  tol.nan_equal = a.nan_equal;
  std::vector<std::string> keys;
  if (!a.key.empty()) {
    std::istringstream in(a.key);
    std::string column;
    while (std::getline(in, column, ',')) {
      if (!column.empty()) {
        keys.push_back(column);
      }
    }
  }
  const auto report = sf::compare_tables(actual, reference, tol, keys);
  if (!a.report_path.empty()) {
    write_file(a.report_path, report.to_json());
  }
  if (a.format == "json") {
    std::cout << report.to_json();
  } else {
    std::cout << sf::to_string(report.status) << ": " << a.actual << " vs " << a.reference
              << "\n";
    for (const auto& note : report.structural_notes) {
      std::cout << "  " << note << "\n";
    }
    for (const auto& c : report.columns) {
      if (c.first_failing_row) {
        std::cout << "  column " << c.column << ": first failing row " << *c.first_failing_row
                  << ", max |dev| " << c.max_abs_dev << "\n";
      }
    }
  }
  return report.passed() ? kOk : kDomainFailure;
}

// ------------------------------------------------------------------- link --

struct LinkCommon {
  std::string ledger = (fs::path(default_root()) / "crosslink.json").string();
};

struct LinkAddArgs {
  LinkCommon common;
  std::string id;
  std::string kind;
  std::string pid;
  std::string title;
  std::string version_label;
  std::string vcs_tag;
};

int cmd_link_add(const LinkAddArgs& a) {
  sf::LedgerLock lock(a.common.ledger);
  auto ledger = sf::load_ledger(a.common.ledger);
  sf::ArtifactRecord rec;
  rec.local_id = a.id;
  rec.kind = sf::parse_artifact_kind(a.kind);
  rec.pid = a.pid;
  rec.title = a.title;
  if (!a.version_label.empty()) {
    rec.version_label = a.version_label;
  }
  if (!a.vcs_tag.empty()) {
    rec.vcs_tag = a.vcs_tag;
  }
  sf::add_artifact(ledger, std::move(rec));
  sf::save_ledger(ledger, a.common.ledger);
  std::cout << "added artifact '" << a.id << "' (" << a.kind << ") to " << a.common.ledger
            << "\n";
  return kOk;
}

struct LinkMeshArgs {
  LinkCommon common;
  std::string milestone;
  std::string artifacts;  // comma-separated local ids (when defining)
  std::string tag;        // milestone tag (when defining)
  std::string format = "text";
};

int cmd_link_mesh(const LinkMeshArgs& a) {
  sf::LedgerLock lock(a.common.ledger);
  auto ledger = sf::load_ledger(a.common.ledger);
  if (ledger.find_milestone(a.milestone) == nullptr) {
    if (a.artifacts.empty() || a.tag.empty()) {
      throw sf::Error("milestone '" + a.milestone +
                      "' is not defined yet; pass --artifacts and --tag to define it");
    }
    std::vector<std::string> ids;
    std::istringstream in(a.artifacts);
    std::string id;
    while (std::getline(in, id, ',')) {
      if (!id.empty()) {
        ids.push_back(id);
      }
    }
    sf::define_milestone(ledger, a.milestone, ids, a.tag);
  }
  const auto pairs = sf::cross_link_mesh(ledger, a.milestone);
  sf::save_ledger(ledger, a.common.ledger);
  if (a.format == "json") {
    ordered_json j;
    j["milestone"] = a.milestone;
    j["new_pairs"] = ordered_json::array();
    for (const auto& [x, y] : pairs) {
      j["new_pairs"].push_back({x, y});
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "meshed milestone '" << a.milestone << "': " << pairs.size()
              << " new link pair(s)\n";
  }
  return kOk;
}

struct LinkCheckArgs {
  LinkCommon common;
  std::string milestone;
  std::string format = "text";
};

int cmd_link_check(const LinkCheckArgs& a) {
  const auto ledger = sf::load_ledger(a.common.ledger);
  const auto findings = sf::validate_milestone(ledger, a.milestone);
  if (a.format == "json") {
    auto j = findings_json(findings);
    j["milestone"] = a.milestone;
    std::cout << j.dump(2) << "\n";
  } else {
    print_findings_text(findings, std::cout);
    std::cout << "milestone '" << a.milestone << "': " << findings.size() << " finding(s)\n";
  }
  return sf::has_errors(findings) ? kDomainFailure : kOk;
}

struct LinkRenderArgs {
  LinkCommon common;
  std::string id;
  std::string out;  // default: <ledger dir>/<id>.metadata.json
  bool to_stdout = false;
};

int cmd_link_render(const LinkRenderArgs& a) {
  const auto ledger = sf::load_ledger(a.common.ledger);
  const auto record = sf::render_repo_metadata(ledger, a.id);
  if (a.to_stdout) {
    std::cout << record;
    return kOk;
  }
  const fs::path out = a.out.empty()
                           ? fs::path(a.common.ledger).parent_path() / (a.id + ".metadata.json")
                           : fs::path(a.out);
  write_file(out, record);
  std::cout << "wrote " << out.string() << "\n";
  return kOk;
}

struct LinkReadmeArgs {
  LinkCommon common;
  std::string milestone;
  std::string out;  // empty: stdout
};

int cmd_link_readme(const LinkReadmeArgs& a) {
  const auto ledger = sf::load_ledger(a.common.ledger);
  const auto snippet = sf::readme_snippet(ledger, a.milestone);
  if (a.out.empty()) {
    std::cout << snippet;
  } else {
    write_file(a.out, snippet);
    std::cout << "wrote " << a.out << "\n";
  }
  return kOk;
}

struct LinkTagArgs {
  std::string check;  // tag string to validate
  int year = 0;
  std::string venue;
  std::string topic;
  int revision = 0;
};

int cmd_link_tag(const LinkTagArgs& a) {
  if (!a.check.empty()) {
    const bool ok = sf::validate_tag(a.check);
    std::cout << a.check << ": " << (ok ? "valid" : "invalid") << "\n";
    return ok ? kOk : kDomainFailure;
  }
  if (a.year == 0 || a.venue.empty() || a.topic.empty()) {
    throw sf::Error("pass a tag to validate, or --year/--venue/--topic to compose one");
  }
  std::optional<int> revision;
  if (a.revision != 0) {
    revision = a.revision;
  }
  std::cout << sf::make_tag(a.year, a.venue, a.topic, revision) << "\n";
  return kOk;
}

struct LinkNewVersionArgs {
  LinkCommon common;
  std::string id;
  std::string pid;
  std::string version_label;
};

int cmd_link_new_version(const LinkNewVersionArgs& a) {
  sf::LedgerLock lock(a.common.ledger);
  auto ledger = sf::load_ledger(a.common.ledger);
  std::optional<std::string> label;
  if (!a.version_label.empty()) {
    label = a.version_label;
  }
  const auto new_id = sf::new_version(ledger, a.id, a.pid, label);
  sf::save_ledger(ledger, a.common.ledger);
  std::cout << "registered '" << new_id << "' as the new version of '" << a.id << "'\n";
  return kOk;
}

// ------------------------------------------------------------ lint-recipe --

struct LintArgs {
  std::string file;
  std::vector<std::string> allow_hosts;
  bool strict = false;
  std::string format = "text";
};

int cmd_lint_recipe(const LintArgs& a) {
  sf::LintConfig config;
  for (const auto& host : a.allow_hosts) {
    config.persistent_host_allowlist.push_back(host);
  }
  const auto findings = sf::lint_text(read_file(a.file), config);
  std::size_t errors = 0;
  std::size_t warnings = 0;
  for (const auto& f : findings) {
    (f.severity == sf::Severity::error ? errors : warnings)++;
  }
  if (a.format == "json") {
    ordered_json j;
    j["file"] = a.file;
    j["findings"] = ordered_json::array();
    for (const auto& f : findings) {
      j["findings"].push_back({{"rule", sf::rule_id(f.rule)},
                               {"severity", sf::to_string(f.severity)},
                               {"line", f.line},
                               {"message", f.message}});
    }
    j["errors"] = errors;
    j["warnings"] = warnings;
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& f : findings) {
      std::cout << a.file << ":" << f.line << ": " << sf::to_string(f.severity) << " ["
                << sf::rule_id(f.rule) << "] " << f.message << "\n";
    }
    std::cout << a.file << ": " << errors << " error(s), " << warnings << " warning(s)\n";
  }
  if (errors > 0 || (a.strict && warnings > 0)) {
    return kDomainFailure;
  }
  return kOk;
}

// --------------------------------------------------------------- metadata --

struct MetadataArgs {
  std::string study;
  std::string root = default_root();
  std::int64_t timestamp = -1;  // <0: now
  std::string format = "text";
};

int cmd_metadata(const MetadataArgs& a) {
  const auto s = load_study(a.root, a.study);
  const auto table_path = s.study_dir / "secondary.csv";
  if (!fs::exists(table_path)) {
    throw sf::Error("study '" + a.study + "' has no secondary.csv yet; run `studyforge collect`");
  }
  const auto table = sf::read_table(read_file(table_path));
  std::vector<std::int64_t> collected;
  for (const auto& c : s.plan.cases) {
    if (fs::exists(s.study_dir / std::to_string(c.case_id) / s.def.secondary_file)) {
      collected.push_back(c.case_id);
    }
  }
  std::optional<std::int64_t> epoch;
  if (a.timestamp >= 0) {
    epoch = a.timestamp;
  }
  const auto meta = sf::export_study_metadata(s.plan, table, s.study_dir, epoch, collected);
  if (a.format == "json") {
    std::cout << sf::study_metadata_to_json(meta);
  } else {
    std::cout << "wrote " << (s.study_dir / "study_metadata.json").string() << " ("
              << meta.case_count << " cases, " << meta.checksums.size() << " checksummed file(s))\n";
  }
  return kOk;
}

// ------------------------------------------------------------------- pack --

struct PackArgs {
  std::string root = default_root();
  std::string study;  // primary only
  std::string out;
  std::int64_t timestamp = -1;  // <0: now
  std::string format = "text";
};

int cmd_pack(const PackArgs& a, bool secondary) {
  sf::PackOptions opts;
  if (a.timestamp >= 0) {
    opts.fixed_timestamp = a.timestamp;
  }
  const auto result = secondary ? sf::package_secondary(a.root, a.out, opts)
                                : sf::package_primary(a.root, a.study, a.out, opts);
  if (a.format == "json") {
    ordered_json j;
    j["archive"] = result.archive_path.string();
    j["manifest"] = result.manifest_path.string();
    j["files"] = result.manifest.entries.size();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << result.archive_path.string() << " ("
              << result.manifest.entries.size() << " file(s); manifest "
              << result.manifest_path.string() << ")\n";
  }
  return kOk;
}

// ----------------------------------------------------------------- report --

struct ReportArgs {
  std::string study;  // empty: render the multi-study index
  std::string root = default_root();
  std::vector<std::string> charts;
  std::string reference;  // optional regression reference to embed
  double rel = 1e-6;
  double abs = 1e-12;
  bool nan_equal = false;
  std::string out;
  std::string format = "text";
};

int cmd_report(const ReportArgs& a) {
  if (a.study.empty()) {
    // Index mode: one landing page linking every study report under root.
    std::vector<sf::IndexEntry> entries;
    std::vector<fs::path> studies;
    for (const auto& entry : fs::directory_iterator(a.root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "case_map.csv")) {
        studies.push_back(entry.path());
      }
    }
    std::sort(studies.begin(), studies.end());
    for (const auto& dir : studies) {
      const auto name = dir.filename().string();
      const auto plan = sf::read_case_map(read_file(dir / "case_map.csv"));
      sf::IndexEntry e;
      e.study_name = name;
      e.href = name + "/report.html";
      e.summary = std::to_string(plan.cases.size()) + " case(s)";
      entries.push_back(std::move(e));
    }
    const fs::path out = a.out.empty() ? fs::path(a.root) / "index.html" : fs::path(a.out);
    write_file(out, sf::render_index_html(entries));
    std::cout << "wrote " << out.string() << " (" << entries.size() << " study link(s))\n";
    return kOk;
  }

  const auto s = load_study(a.root, a.study);
  const auto table_path = s.study_dir / "secondary.csv";
  if (!fs::exists(table_path)) {
    throw sf::Error("study '" + a.study + "' has no secondary.csv yet; run `studyforge collect`");
  }
  const auto table = sf::read_table(read_file(table_path));
  const auto run_report = sf::status(s.study_dir);

  std::optional<sf::ComparisonReport> comparison;
  if (!a.reference.empty()) {
    sf::ToleranceSpec tol;
    tol.defaults.rel = a.rel;
    tol.defaults.abs = a.abs;
    tol.nan_equal = a.nan_equal;
    comparison = sf::compare_tables(table, sf::read_table(read_file(a.reference)), tol);
  }

  std::vector<sf::ChartSpec> charts;
  for (const auto& text : a.charts) {
    charts.push_back(parse_chart_spec(text));
  }

  const auto html = sf::render_study_html(s.plan, run_report, table,
                                          comparison ? &*comparison : nullptr, charts);
  const fs::path out = a.out.empty() ? s.study_dir / "report.html" : fs::path(a.out);
  write_file(out, html);
  if (a.format == "json") {
    ordered_json j;
    j["study"] = s.plan.study_name;
    j["out"] = out.string();
    j["charts"] = charts.size();
    j["bytes"] = html.size();
    if (comparison) {
      j["comparison"] = sf::to_string(comparison->status);
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << out.string() << " (" << html.size() << " bytes, " << charts.size()
              << " chart(s))\n";
  }
  return kOk;
}

void add_format_option(CLI::App* cmd, std::string& target) {
  cmd->add_option("--format", target, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"studyforge — parameter studies: plan, run, collect, compare, link, package"};
  app.set_version_flag("--version", std::string(sf::kToolVersion));
  app.require_subcommand(1);

  int exit_code = kOk;

  // plan
  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Expand a study definition and materialize case dirs");
  plan->add_option("definition", plan_args.definition, "Study definition file")
      ->required()
      ->check(CLI::ExistingFile);
  plan->add_option("--root", plan_args.root, "Results root (default: $STUDYFORGE_ROOT or .)");
  plan->add_flag("--force", plan_args.force, "Replace an existing study directory");
  add_format_option(plan, plan_args.format);
  plan->callback([&] { exit_code = cmd_plan(plan_args); });

  // run
  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute the pending cases of a materialized study");
  run->add_option("study", run_args.study, "Study name under the root")->required();
  run->add_option("--root", run_args.root, "Results root (default: $STUDYFORGE_ROOT or .)");
  run->add_option("--max-parallel", run_args.max_parallel, "Concurrent case limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--env", run_args.env_passthrough,
                  "Pass only these environment variables (plus PATH) to cases; default: all");
  run->add_option("--submit-wrapper", run_args.submit_wrapper,
                  "Command prefix for every case (e.g. a scheduler submit command)");
  add_format_option(run, run_args.format);
  run->callback([&] { exit_code = cmd_run(run_args); });

  // stop
  StudyArgs stop_args;
  auto* stop = app.add_subcommand("stop", "Ask a running study to stop launching new cases");
  stop->add_option("study", stop_args.study, "Study name under the root")->required();
  stop->add_option("--root", stop_args.root, "Results root (default: $STUDYFORGE_ROOT or .)");
  stop->add_flag("--clear", stop_args.clear,
                 "Remove the stop marker instead, so a later run may launch cases");
  stop->callback([&] { exit_code = cmd_stop(stop_args); });

  // status
  StudyArgs status_args;
  auto* status = app.add_subcommand("status", "Reconstruct per-case status from status files");
  status->add_option("study", status_args.study, "Study name under the root")->required();
  status->add_option("--root", status_args.root, "Results root (default: $STUDYFORGE_ROOT or .)");
  add_format_option(status, status_args.format);
  status->callback([&] { exit_code = cmd_status(status_args); });

  // collect
  CollectArgs collect_args;
  auto* collect = app.add_subcommand("collect", "Merge per-case tables into secondary.csv");
  collect->add_option("study", collect_args.study, "Study name under the root")->required();
  collect->add_option("--root", collect_args.root,
                      "Results root (default: $STUDYFORGE_ROOT or .)");
  collect->add_option("--out", collect_args.out, "Output CSV (default: <study>/secondary.csv)");
  collect->add_flag("--include-case-id", collect_args.include_case_id,
                    "Add a PARAM_CASE_ID column");
  add_format_option(collect, collect_args.format);
  collect->callback([&] { exit_code = cmd_collect(collect_args); });

  // validate
  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Lint a secondary-data CSV");
  validate->add_option("table", validate_args.table, "CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  add_format_option(validate, validate_args.format);
  validate->callback([&] { exit_code = cmd_validate(validate_args); });

  // compare
  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Compare a table against a reference");
  compare->add_option("--reference", compare_args.reference, "Reference CSV")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--actual", compare_args.actual, "Actual CSV")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--rel", compare_args.rel, "Relative tolerance")->capture_default_str();
  compare->add_option("--abs", compare_args.abs, "Absolute tolerance")->capture_default_str();
  compare->add_flag("--nan-equal", compare_args.nan_equal, "Treat NaN == NaN");
  compare->add_option("--key", compare_args.key,
                      "Comma-separated key columns for row alignment (default: positional)");
  compare->add_option("--report", compare_args.report_path, "Write the JSON report here");
  add_format_option(compare, compare_args.format);
  compare->callback([&] { exit_code = cmd_compare(compare_args); });

  // link
  auto* link = app.add_subcommand("link", "Cross-link published artifacts via a PID ledger");
  link->require_subcommand(1);

  LinkAddArgs link_add_args;
  auto* link_add = link->add_subcommand("add", "Register an artifact");
  link_add->add_option("--ledger", link_add_args.common.ledger, "Ledger file")
      ->capture_default_str();
  link_add->add_option("--id", link_add_args.id, "Local artifact id")->required();
  link_add
      ->add_option("--kind", link_add_args.kind,
                   "code-snapshot|report|secondary-data|primary-data|image|recipe|live-repo")
      ->required();
  link_add->add_option("--pid", link_add_args.pid, "DOI (10.x/y) or URL")->required();
  link_add->add_option("--title", link_add_args.title, "Human-readable title")->required();
  link_add->add_option("--version-label", link_add_args.version_label, "Version label");
  link_add->add_option("--vcs-tag", link_add_args.vcs_tag, "Tag for code snapshots");
  link_add->callback([&] { exit_code = cmd_link_add(link_add_args); });

  LinkMeshArgs link_mesh_args;
  auto* link_mesh = link->add_subcommand("mesh", "Reciprocally link all milestone artifacts");
  link_mesh->add_option("--ledger", link_mesh_args.common.ledger, "Ledger file")
      ->capture_default_str();
  link_mesh->add_option("--milestone", link_mesh_args.milestone, "Milestone name")->required();
  link_mesh->add_option("--artifacts", link_mesh_args.artifacts,
                        "Comma-separated artifact ids (defines the milestone when new)");
  link_mesh->add_option("--tag", link_mesh_args.tag,
                        "Milestone tag (defines the milestone when new)");
  add_format_option(link_mesh, link_mesh_args.format);
  link_mesh->callback([&] { exit_code = cmd_link_mesh(link_mesh_args); });

  LinkCheckArgs link_check_args;
  auto* link_check = link->add_subcommand("check", "Validate a milestone's links and records");
  link_check->add_option("--ledger", link_check_args.common.ledger, "Ledger file")
      ->capture_default_str();
  link_check->add_option("--milestone", link_check_args.milestone, "Milestone name")->required();
  add_format_option(link_check, link_check_args.format);
  link_check->callback([&] { exit_code = cmd_link_check(link_check_args); });

  LinkRenderArgs link_render_args;
  auto* link_render = link->add_subcommand("render", "Render an artifact's metadata record");
  link_render->add_option("--ledger", link_render_args.common.ledger, "Ledger file")
      ->capture_default_str();
  link_render->add_option("id", link_render_args.id, "Local artifact id")->required();
  link_render->add_option("--out", link_render_args.out,
                          "Output file (default: <id>.metadata.json beside the ledger)");
  link_render->add_flag("--stdout", link_render_args.to_stdout, "Print instead of writing");
  link_render->callback([&] { exit_code = cmd_link_render(link_render_args); });

  LinkReadmeArgs link_readme_args;
  auto* link_readme = link->add_subcommand("readme", "Emit a README section for a milestone");
  link_readme->add_option("--ledger", link_readme_args.common.ledger, "Ledger file")
      ->capture_default_str();
  link_readme->add_option("--milestone", link_readme_args.milestone, "Milestone name")
      ->required();
  link_readme->add_option("--out", link_readme_args.out, "Output file (default: stdout)");
  link_readme->callback([&] { exit_code = cmd_link_readme(link_readme_args); });

  LinkTagArgs link_tag_args;
  auto* link_tag = link->add_subcommand("tag", "Compose or validate a milestone tag");
  link_tag->add_option("tag", link_tag_args.check, "Tag string to validate");
  link_tag->add_option("--year", link_tag_args.year, "Four-digit year");
  link_tag->add_option("--venue", link_tag_args.venue, "Venue slug ([a-z0-9]+)");
  link_tag->add_option("--topic", link_tag_args.topic, "Topic slug ([a-z0-9]+)");
  link_tag->add_option("--revision", link_tag_args.revision, "Positive revision number");
  link_tag->callback([&] { exit_code = cmd_link_tag(link_tag_args); });

  LinkNewVersionArgs link_nv_args;
  auto* link_nv = link->add_subcommand("new-version", "Register a new version of an artifact");
  link_nv->add_option("--ledger", link_nv_args.common.ledger, "Ledger file")
      ->capture_default_str();
  link_nv->add_option("--id", link_nv_args.id, "Existing artifact id")->required();
  link_nv->add_option("--pid", link_nv_args.pid, "PID of the new version")->required();
  link_nv->add_option("--version-label", link_nv_args.version_label, "Version label");
  link_nv->callback([&] { exit_code = cmd_link_new_version(link_nv_args); });

  // lint-recipe
  LintArgs lint_args;
  auto* lint = app.add_subcommand("lint-recipe", "Check a container recipe for pinning rules");
  lint->add_option("file", lint_args.file, "Recipe file")->required()->check(CLI::ExistingFile);
  lint->add_option("--allow-host", lint_args.allow_hosts,
                   "Extra host treated as persistent (repeatable)");
  lint->add_flag("--strict", lint_args.strict, "Exit 1 on warnings too");
  add_format_option(lint, lint_args.format);
  lint->callback([&] { exit_code = cmd_lint_recipe(lint_args); });

  // metadata
  MetadataArgs metadata_args;
  auto* metadata = app.add_subcommand("metadata", "Export study_metadata.json for a study");
  metadata->add_option("study", metadata_args.study, "Study name under the root")->required();
  metadata->add_option("--root", metadata_args.root,
                       "Results root (default: $STUDYFORGE_ROOT or .)");
  metadata->add_option("--timestamp", metadata_args.timestamp,
                       "Fixed creation time (epoch seconds) for reproducible output");
  add_format_option(metadata, metadata_args.format);
  metadata->callback([&] { exit_code = cmd_metadata(metadata_args); });

  // pack
  auto* pack = app.add_subcommand("pack", "Archive study data (tar.gz + manifest)");
  pack->require_subcommand(1);

  PackArgs pack_secondary_args;
  auto* pack_secondary =
      pack->add_subcommand("secondary", "All studies' tables, metadata, and reports");
  pack_secondary->add_option("--root", pack_secondary_args.root,
                             "Results root (default: $STUDYFORGE_ROOT or .)");
  pack_secondary->add_option("--out", pack_secondary_args.out, "Archive path")->required();
  pack_secondary->add_option("--timestamp", pack_secondary_args.timestamp,
                             "Fixed entry timestamp (epoch seconds) for reproducible archives");
  add_format_option(pack_secondary, pack_secondary_args.format);
  pack_secondary->callback([&] { exit_code = cmd_pack(pack_secondary_args, true); });

  PackArgs pack_primary_args;
  auto* pack_primary = pack->add_subcommand("primary", "One study's full case directories");
  pack_primary->add_option("--root", pack_primary_args.root,
                           "Results root (default: $STUDYFORGE_ROOT or .)");
  pack_primary->add_option("--study", pack_primary_args.study, "Study name")->required();
  pack_primary->add_option("--out", pack_primary_args.out, "Archive path")->required();
  pack_primary->add_option("--timestamp", pack_primary_args.timestamp,
                           "Fixed entry timestamp (epoch seconds) for reproducible archives");
  add_format_option(pack_primary, pack_primary_args.format);
  pack_primary->callback([&] { exit_code = cmd_pack(pack_primary_args, false); });

  // report
  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Render a static HTML study report");
  report->add_option("--study", report_args.study,
                     "Study name; omit to render an index of all studies");
  report->add_option("--root", report_args.root,
                     "Results root (default: $STUDYFORGE_ROOT or .)");
  report->add_option("--chart", report_args.charts,
                     "Chart spec y=COL,x=COL[,group=PARAM_COL][,title=TEXT] (repeatable)");
  report->add_option("--reference", report_args.reference,
                     "Reference CSV; embeds a regression verdict");
  report->add_option("--rel", report_args.rel, "Relative tolerance for --reference")
      ->capture_default_str();
  report->add_option("--abs", report_args.abs, "Absolute tolerance for --reference")
      ->capture_default_str();
  report->add_flag("--nan-equal", report_args.nan_equal, "Treat NaN == NaN for --reference");
  report->add_option("--out", report_args.out, "Output file (default: <study>/report.html)");
  add_format_option(report, report_args.format);
  report->callback([&] { exit_code = cmd_report(report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  } catch (const sf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return exit_code;
}
