#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "studyforge/secondary_table.hpp"
#include "studyforge/study_model.hpp"

namespace studyforge {

struct ManifestEntry {
  std::string path;  // '/'-separated, relative to the archive root
  std::uint64_t size = 0;
  std::string sha256;

  bool operator==(const ManifestEntry&) const = default;
};

/// Listing of an archive's contents: path-sorted, unique, hashed.
struct Manifest {
  std::vector<ManifestEntry> entries;

  std::string to_json() const;
  bool operator==(const Manifest&) const = default;
};

Manifest manifest_from_json(const std::string& text);

/// Hash and measure files (paths '/'-relative to base_dir). Entries come
/// back path-sorted regardless of input order. Throws Error on unreadable
/// files.
Manifest make_manifest(const std::filesystem::path& base_dir,
                       const std::vector<std::string>& relative_paths);

struct PackOptions {
  /// Archive entry timestamp; defaults to the current time. Fix it to make
  /// archives byte-reproducible.
  std::optional<std::int64_t> fixed_timestamp;
};

/// Sidecar describing a study at packaging time.
struct StudyMetadata {
  std::string study_name;
  std::string created_utc;  // ISO 8601, e.g. 2026-08-19T12:00:00Z
  std::vector<std::string> parameter_names;
  std::int64_t case_count = 0;
  std::vector<std::int64_t> collected_cases;   // ids that contributed rows
  std::map<std::string, std::string> checksums;  // path -> sha-256 hex
  std::string tool_version;
};

std::string study_metadata_to_json(const StudyMetadata& m);
StudyMetadata study_metadata_from_json(const std::string& text);

/// Write study_metadata.json into the study directory, checksumming its
/// packageable companions (case_map.csv, secondary.csv, report.html when
/// present). The timestamp defaults to now; fix created_epoch for
/// deterministic output. collected_cases records which cases contributed to
/// the table (empty means all).
StudyMetadata export_study_metadata(const StudyPlan& plan, const SecondaryTable& collected,
                                    const std::filesystem::path& study_dir,
                                    std::optional<std::int64_t> created_epoch = std::nullopt,
                                    std::vector<std::int64_t> collected_cases = {});

struct PackResult {
  std::filesystem::path archive_path;
  std::filesystem::path manifest_path;  // <archive>.manifest.json
  Manifest manifest;
};

/// Archive every study under root (a study = a subdirectory holding
/// case_map.csv): per study, case_map.csv, secondary.csv,
/// study_metadata.json, and report.html when present — minus files matching
/// the study's primary globs (read from its study.json). The manifest is
/// written alongside the archive. Throws Error when root holds no study or
/// a required file is missing.
PackResult package_secondary(const std::filesystem::path& results_root,
                             const std::filesystem::path& out_archive,
                             const PackOptions& opts = {});

/// Archive one study's full case directories (logs, params, outputs),
/// manifest alongside. Never mixes studies. Throws Error on an unknown
/// study or a study without case directories.
PackResult package_primary(const std::filesystem::path& results_root,
                           const std::string& study_name,
                           const std::filesystem::path& out_archive,
                           const PackOptions& opts = {});

/// Shell-style glob match over a study-relative path ('*'/'?' wildcards,
/// '*' crosses directory separators). Used for primary globs.
bool glob_match(const std::string& pattern, const std::string& path);

}  // namespace studyforge
