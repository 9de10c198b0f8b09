#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "studyforge/study_model.hpp"

namespace studyforge {

enum class CaseStatus { pending, running, succeeded, failed, stopped };

std::string to_string(CaseStatus s);
CaseStatus parse_case_status(std::string_view text);

struct CaseResult {
  std::int64_t case_id = 0;
  CaseStatus status = CaseStatus::pending;
  std::optional<int> exit_code;
  std::optional<double> wall_seconds;
  std::string note;

  bool operator==(const CaseResult&) const = default;
};

struct StatusTransition {
  std::int64_t case_id;
  CaseStatus from;
  CaseStatus to;

  bool operator==(const StatusTransition&) const = default;
};

struct RunReport {
  std::string study_name;
  std::vector<CaseResult> cases;          // case-id order
  std::vector<StatusTransition> transitions;  // observation order

  std::size_t count(CaseStatus s) const;
  bool all_succeeded() const;
};

struct ExecutorConfig {
  std::filesystem::path root;            // parent of the study directory
  int max_parallel = 1;
  std::vector<std::string> env_passthrough;  // empty = inherit everything
  std::optional<std::string> submit_wrapper; // prefixed to every command
};

/// Substitute {name} placeholders in a command template from the case
/// vector, plus {CASE_ID} with the decimal id. {{ and }} are literal
/// braces. Throws Error on unknown or malformed placeholders.
std::string render_command(const std::string& command_template, const CaseRecord& c);

/// Placeholder names referenced by a template, in first-use order.
std::vector<std::string> template_placeholders(const std::string& command_template);

/// Create <root>/<study_name>/ with case_map.csv, study.json, and one
/// <case_id>/ directory per case — unpadded decimal, so case 7 lives in
/// "<study>/7/" — each holding params.json and a "pending" status file.
/// Refuses to overwrite an existing study directory unless force is set.
/// Returns the study directory.
std::filesystem::path materialize(const StudyPlan& plan, const StudyDefinition& def,
                                  const std::filesystem::path& root, bool force = false);

/// Run every pending case of a materialized study: at most max_parallel
/// children at once, each launched via /bin/sh -c in its case directory with
/// stdout/stderr captured to logs. A stop request (see request_stop) is
/// honored between launches; already-running cases finish. Status files are
/// updated atomically at every transition.
RunReport run(const StudyPlan& plan, const StudyDefinition& def, const ExecutorConfig& cfg);

/// Ask a running executor (possibly in another process) to stop launching
/// new cases. Idempotent.
void request_stop(const std::filesystem::path& study_dir);

bool stop_requested(const std::filesystem::path& study_dir);
void clear_stop(const std::filesystem::path& study_dir);

/// Reconstruct per-case results for a materialized study from its status
/// files alone (no executor required). Exit codes are not persisted, so the
/// results carry statuses only.
RunReport status(const std::filesystem::path& study_dir);

}  // namespace studyforge
