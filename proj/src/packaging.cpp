#include "studyforge/packaging.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "studyforge/archive.hpp"
#include "studyforge/error.hpp"
#include "studyforge/hashing.hpp"
#include "studyforge/version.hpp"

#include <json.hpp>

namespace studyforge {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << contents;
  out.flush();
  if (!out) {
    throw Error("write to '" + path.string() + "' failed");
  }
}

std::string iso8601_utc(std::int64_t epoch) {
  std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

/// Study definition persisted by materialize; only primary_globs matter here.
std::vector<std::string> load_primary_globs(const std::filesystem::path& study_dir) {
  const auto path = study_dir / "study.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return {};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    auto j = ordered_json::parse(buf.str());
    return j.value("primary_globs", std::vector<std::string>{});
  } catch (const nlohmann::json::exception&) {
    return {};
  }
}

}  // namespace

bool glob_match(const std::string& pattern, const std::string& path) {
  return ::fnmatch(pattern.c_str(), path.c_str(), 0) == 0;
}

std::string Manifest::to_json() const {
  ordered_json j;
  j["entries"] = ordered_json::array();
  for (const auto& e : entries) {
    j["entries"].push_back({{"path", e.path}, {"size", e.size}, {"sha256", e.sha256}});
  }
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  Manifest m;
  try {
    auto j = ordered_json::parse(text);
    for (const auto& e : j.value("entries", ordered_json::array())) {
      m.entries.push_back({e.at("path").get<std::string>(), e.at("size").get<std::uint64_t>(),
                           e.at("sha256").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest is not valid: ") + e.what());
  }
  return m;
}

Manifest make_manifest(const std::filesystem::path& base_dir,
                       const std::vector<std::string>& relative_paths) {
  Manifest m;
  std::set<std::string> seen;
  for (const auto& rel : relative_paths) {
    if (!seen.insert(rel).second) {
      throw Error("duplicate manifest path '" + rel + "'");
    }
    const auto full = base_dir / rel;
    if (!std::filesystem::is_regular_file(full)) {
      throw Error("cannot read '" + full.string() + "'");
    }
    ManifestEntry e;
    e.path = rel;
    e.size = std::filesystem::file_size(full);
    e.sha256 = sha256_file(full);
    m.entries.push_back(std::move(e));
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return m;
}

std::string study_metadata_to_json(const StudyMetadata& m) {
  ordered_json j;
  j["study_name"] = m.study_name;
  j["created"] = m.created_utc;
  j["parameter_names"] = m.parameter_names;
  j["case_count"] = m.case_count;
  j["collected_cases"] = m.collected_cases;
  j["checksums"] = ordered_json::object();
  for (const auto& [path, hash] : m.checksums) {
    j["checksums"][path] = hash;
  }
  j["tool_version"] = m.tool_version;
  return j.dump(2) + "\n";
}

StudyMetadata study_metadata_from_json(const std::string& text) {
  StudyMetadata m;
  try {
    auto j = ordered_json::parse(text);
    m.study_name = j.at("study_name").get<std::string>();
    m.created_utc = j.value("created", std::string{});
    m.parameter_names = j.value("parameter_names", std::vector<std::string>{});
    m.case_count = j.value("case_count", std::int64_t{0});
    m.collected_cases = j.value("collected_cases", std::vector<std::int64_t>{});
    // Bind before iterating: items() must not outlive the json object.
    const ordered_json checksums = j.value("checksums", ordered_json::object());
    for (const auto& [path, hash] : checksums.items()) {
      m.checksums[path] = hash.get<std::string>();
    }
    m.tool_version = j.value("tool_version", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("study metadata is not valid: ") + e.what());
  }
  return m;
}

StudyMetadata export_study_metadata(const StudyPlan& plan, const SecondaryTable& collected,
                                    const std::filesystem::path& study_dir,
                                    std::optional<std::int64_t> created_epoch,
                                    std::vector<std::int64_t> collected_cases) {
  (void)collected;  // presence is the precondition; content is hashed from disk
  StudyMetadata m;
  m.study_name = plan.study_name;
  m.created_utc = iso8601_utc(created_epoch ? *created_epoch : std::time(nullptr));
  m.parameter_names = plan.parameter_names;
  m.case_count = static_cast<std::int64_t>(plan.cases.size());
  m.collected_cases = std::move(collected_cases);
  m.tool_version = kToolVersion;

  for (const char* name : {"case_map.csv", "secondary.csv", "report.html"}) {
    const auto path = study_dir / name;
    if (std::filesystem::exists(path)) {
      m.checksums[name] = sha256_file(path);
    }
  }
  write_file(study_dir / "study_metadata.json", study_metadata_to_json(m));
  return m;
}

namespace {

/// Studies under root: subdirectories holding a case_map.csv, name-sorted.
std::vector<std::filesystem::path> find_studies(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> studies;
  if (!std::filesystem::is_directory(root)) {
    throw Error("results root '" + root.string() + "' is not a directory");
  }
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "case_map.csv")) {
      studies.push_back(entry.path());
    }
  }
  std::sort(studies.begin(), studies.end());
  return studies;
}

PackResult write_archive(const std::filesystem::path& base_dir,
                         const std::vector<std::string>& rel_paths,
                         const std::filesystem::path& out_archive, const PackOptions& opts) {
  std::vector<std::string> sorted = rel_paths;
  std::sort(sorted.begin(), sorted.end());

  const std::int64_t mtime =
      opts.fixed_timestamp ? *opts.fixed_timestamp : static_cast<std::int64_t>(std::time(nullptr));
  TarGzWriter writer(out_archive, mtime);
  for (const auto& rel : sorted) {
    writer.add_file(rel, read_file(base_dir / rel));
  }
  writer.close();

  PackResult result;
  result.archive_path = out_archive;
  result.manifest = make_manifest(base_dir, sorted);
  result.manifest_path = out_archive.string() + ".manifest.json";
  write_file(result.manifest_path, result.manifest.to_json());
  return result;
}

}  // namespace

PackResult package_secondary(const std::filesystem::path& results_root,
                             const std::filesystem::path& out_archive, const PackOptions& opts) {
  const auto studies = find_studies(results_root);
  if (studies.empty()) {
    throw Error("no study under '" + results_root.string() +
                "' (a study directory holds a case_map.csv)");
  }

  std::vector<std::string> rel_paths;
  for (const auto& study_dir : studies) {
    const std::string study = study_dir.filename().string();
    const auto globs = load_primary_globs(study_dir);
    auto excluded = [&](const std::string& name) {
      return std::any_of(globs.begin(), globs.end(),
                         [&](const std::string& g) { return glob_match(g, name); });
    };
    for (const char* name : {"case_map.csv", "secondary.csv", "study_metadata.json"}) {
      if (excluded(name)) {
        continue;
      }
      if (!std::filesystem::exists(study_dir / name)) {
        throw Error("study '" + study + "' is missing " + name +
                    "; collect and export metadata before packaging");
      }
      rel_paths.push_back(study + "/" + name);
    }
    if (std::filesystem::exists(study_dir / "report.html") && !excluded("report.html")) {
      rel_paths.push_back(study + "/report.html");
    }
  }
  return write_archive(results_root, rel_paths, out_archive, opts);
}

PackResult package_primary(const std::filesystem::path& results_root,
                           const std::string& study_name,
                           const std::filesystem::path& out_archive, const PackOptions& opts) {
  const auto study_dir = results_root / study_name;
  if (!std::filesystem::is_directory(study_dir)) {
    throw Error("study '" + study_name + "' not found under '" + results_root.string() + "'");
  }

  // Case directories are named by their unpadded decimal case id.
  const auto is_case_dir_name = [](const std::string& name) {
    return !name.empty() &&
           std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isdigit(c); });
  };

  std::vector<std::string> rel_paths;
  for (const auto& entry : std::filesystem::directory_iterator(study_dir)) {
    const std::string dir_name = entry.path().filename().string();
    if (!entry.is_directory() || !is_case_dir_name(dir_name)) {
      continue;
    }
    for (const auto& file :
         std::filesystem::recursive_directory_iterator(entry.path())) {
      if (!file.is_regular_file()) {
        continue;
      }
      const std::string rel =
          std::filesystem::relative(file.path(), results_root).generic_string();
      rel_paths.push_back(rel);
    }
  }
  if (rel_paths.empty()) {
    throw Error("study '" + study_name + "' has no case directories to archive");
  }
  return write_archive(results_root, rel_paths, out_archive, opts);
}

}  // namespace studyforge
