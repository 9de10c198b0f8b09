#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "studyforge/finding.hpp"

namespace studyforge {

enum class RecipeKeyword {
  from,
  run,
  copy,
  add,
  arg,
  env,
  label,
  workdir,
  entrypoint,
  cmd,
  other,
};

RecipeKeyword parse_recipe_keyword(std::string_view word);

struct RecipeInstruction {
  RecipeKeyword keyword = RecipeKeyword::other;
  std::string raw_keyword;
  std::string args;  // continuation lines joined, comments stripped
  int line = 0;      // 1-based line of the instruction start
};

struct Recipe {
  std::vector<RecipeInstruction> instructions;
};

/// Parse a container build recipe (Dockerfile dialect). Total: unknown
/// keywords become `other` instructions, never errors. Handles trailing-
/// backslash continuations and full-line comments.
Recipe parse_recipe(const std::string& text);

enum class LintRule { unpinned_base, host_copy, mutable_fetch, unpinned_package };

/// Stable identifier, e.g. "R1-unpinned-base".
std::string rule_id(LintRule r);

struct LintFinding {
  LintRule rule;
  Severity severity = Severity::error;
  int line = 0;
  std::string message;
};

struct LintConfig {
  /// Hosts whose unpinned fetches downgrade to warnings (archival services
  /// that guarantee persistence).
  std::vector<std::string> persistent_host_allowlist = {
      "softwareheritage.org", "doi.org", "zenodo.org"};
  std::map<LintRule, Severity> severity_overrides;
};

/// Apply all rules:
///   R1 unpinned-base:    FROM without a digest or version-shaped tag
///   R2 host-copy:        COPY/ADD pulling from outside the build context
///   R3 mutable-fetch:    RUN fetching a mutable ref (clone without commit
///                        pin, download without checksum verification)
///   R4 unpinned-package: package-manager installs without version pins
std::vector<LintFinding> lint(const Recipe& recipe, const LintConfig& config = {});

std::vector<LintFinding> lint_text(const std::string& text, const LintConfig& config = {});

}  // namespace studyforge
