#include "studyforge/crosslink.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "studyforge/error.hpp"

#include <json.hpp>

namespace studyforge {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::code_snapshot:
      return "code-snapshot";
    case ArtifactKind::report:
      return "report";
    case ArtifactKind::secondary_data:
      return "secondary-data";
    case ArtifactKind::primary_data:
      return "primary-data";
    case ArtifactKind::image:
      return "image";
    case ArtifactKind::recipe:
      return "recipe";
    case ArtifactKind::live_repo:
      return "live-repo";
  }
  return "secondary-data";
}

std::string to_string(LinkRelation r) {
  switch (r) {
    case LinkRelation::references:
      return "References";
    case LinkRelation::is_referenced_by:
      return "IsReferencedBy";
    case LinkRelation::is_supplement_to:
      return "IsSupplementTo";
    case LinkRelation::is_new_version_of:
      return "IsNewVersionOf";
  }
  return "References";
}

ArtifactKind parse_artifact_kind(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(ArtifactKind::live_repo); ++k) {
    if (to_string(static_cast<ArtifactKind>(k)) == text) {
      return static_cast<ArtifactKind>(k);
    }
  }
  throw Error("unknown artifact kind '" + std::string(text) + "'");
}

LinkRelation parse_link_relation(std::string_view text) {
  for (int r = 0; r <= static_cast<int>(LinkRelation::is_new_version_of); ++r) {
    if (to_string(static_cast<LinkRelation>(r)) == text) {
      return static_cast<LinkRelation>(r);
    }
  }
  throw Error("unknown link relation '" + std::string(text) + "'");
}

const ArtifactRecord* Ledger::find_artifact(std::string_view local_id) const {
  for (const auto& a : artifacts) {
    if (a.local_id == local_id) {
      return &a;
    }
  }
  return nullptr;
}

const Milestone* Ledger::find_milestone(std::string_view name) const {
  for (const auto& m : milestones) {
    if (m.name == name) {
      return &m;
    }
  }
  return nullptr;
}

bool Ledger::linked(std::string_view from, std::string_view to, LinkRelation r) const {
  return std::any_of(links.begin(), links.end(), [&](const Link& l) {
    return l.from == from && l.to == to && l.relation == r;
  });
}

bool is_doi(std::string_view pid) {
  if (pid.substr(0, 3) != "10.") {
    return false;
  }
  std::size_t i = 3;
  std::size_t digits = 0;
  while (i < pid.size() && pid[i] >= '0' && pid[i] <= '9') {
    ++i;
    ++digits;
  }
  if (digits < 4 || digits > 9 || i >= pid.size() || pid[i] != '/') {
    return false;
  }
  std::string_view suffix = pid.substr(i + 1);
  return !suffix.empty() &&
         suffix.find_first_of(" \t\r\n") == std::string_view::npos;
}

bool is_url(std::string_view pid) {
  std::string_view rest;
  if (pid.substr(0, 8) == "https://") {
    rest = pid.substr(8);
  } else if (pid.substr(0, 7) == "http://") {
    rest = pid.substr(7);
  } else {
    return false;
  }
  return !rest.empty() && rest[0] != '/' &&
         rest.find_first_of(" \t\r\n") == std::string_view::npos;
}

namespace {

void check_pid(const ArtifactRecord& record) {
  if (record.pid.empty()) {
    throw Error("artifact '" + record.local_id + "' needs a pid (DOI or URL)");
  }
  if (record.kind == ArtifactKind::live_repo) {
    if (!is_url(record.pid)) {
      throw Error("live-repo '" + record.local_id + "' needs a URL, got '" + record.pid + "'");
    }
    return;
  }
  if (record.pid.substr(0, 3) == "10.") {
    if (!is_doi(record.pid)) {
      throw Error("malformed DOI '" + record.pid + "' (expected 10.<registrant>/<suffix>)");
    }
    return;
  }
  if (!is_url(record.pid)) {
    throw Error("pid '" + record.pid + "' is neither a DOI (10.<registrant>/<suffix>) nor a URL");
  }
}

}  // namespace

void add_artifact(Ledger& ledger, ArtifactRecord record) {
  if (record.local_id.empty()) {
    throw Error("artifact local_id must not be empty");
  }
  if (ledger.find_artifact(record.local_id) != nullptr) {
    throw Error("artifact '" + record.local_id + "' already exists");
  }
  check_pid(record);
  ledger.artifacts.push_back(std::move(record));
}

void add_link(Ledger& ledger, const std::string& from, const std::string& to,
              LinkRelation relation) {
  if (from == to) {
    throw Error("an artifact cannot link to itself");
  }
  if (ledger.find_artifact(from) == nullptr) {
    throw Error("unknown artifact '" + from + "'");
  }
  if (ledger.find_artifact(to) == nullptr) {
    throw Error("unknown artifact '" + to + "'");
  }
  if (!ledger.linked(from, to, relation)) {
    ledger.links.push_back({from, to, relation});
  }
  if (relation == LinkRelation::references && !ledger.linked(to, from, LinkRelation::is_referenced_by)) {
    ledger.links.push_back({to, from, LinkRelation::is_referenced_by});
  }
  if (relation == LinkRelation::is_referenced_by && !ledger.linked(to, from, LinkRelation::references)) {
    ledger.links.push_back({to, from, LinkRelation::references});
  }
}

void define_milestone(Ledger& ledger, const std::string& name,
                      const std::vector<std::string>& artifact_ids, const std::string& tag) {
  if (name.empty()) {
    throw Error("milestone name must not be empty");
  }
  if (ledger.find_milestone(name) != nullptr) {
    throw Error("milestone '" + name + "' already exists");
  }
  if (!validate_tag(tag)) {
    throw Error("tag '" + tag + "' does not follow <year>-<venue>-<topic>[-r<revision>]");
  }
  std::set<std::string> seen;
  bool has_report = false;
  bool has_snapshot = false;
  for (const auto& id : artifact_ids) {
    const ArtifactRecord* a = ledger.find_artifact(id);
    if (a == nullptr) {
      throw Error("unknown artifact '" + id + "'");
    }
    if (!seen.insert(id).second) {
      throw Error("artifact '" + id + "' listed twice");
    }
    has_report = has_report || a->kind == ArtifactKind::report;
    has_snapshot = has_snapshot || a->kind == ArtifactKind::code_snapshot;
  }
  if (!has_report || !has_snapshot) {
    throw Error("a milestone needs at least one report and one code-snapshot");
  }
  ledger.milestones.push_back({name, artifact_ids, tag});
}

std::vector<std::pair<std::string, std::string>> cross_link_mesh(Ledger& ledger,
                                                                 const std::string& milestone) {
  const Milestone* m = ledger.find_milestone(milestone);
  if (m == nullptr) {
    throw Error("unknown milestone '" + milestone + "'");
  }
  std::vector<std::pair<std::string, std::string>> added;
  for (std::size_t i = 0; i < m->artifact_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < m->artifact_ids.size(); ++j) {
      const std::string& a = m->artifact_ids[i];
      const std::string& b = m->artifact_ids[j];
      const bool a_live = ledger.find_artifact(a)->kind == ArtifactKind::live_repo;
      const bool b_live = ledger.find_artifact(b)->kind == ArtifactKind::live_repo;
      bool grew = false;
      if (a_live || b_live) {
        // The live repository has no metadata record of its own to update;
        // it supplements the frozen artifact, one-way.
        const std::string& live = a_live ? a : b;
        const std::string& other = a_live ? b : a;
        if (!ledger.linked(live, other, LinkRelation::is_supplement_to)) {
          add_link(ledger, live, other, LinkRelation::is_supplement_to);
          grew = true;
        }
      } else {
        if (!ledger.linked(a, b, LinkRelation::references)) {
          add_link(ledger, a, b, LinkRelation::references);
          grew = true;
        }
        if (!ledger.linked(b, a, LinkRelation::is_referenced_by)) {
          add_link(ledger, b, a, LinkRelation::is_referenced_by);
          grew = true;
        }
      }
      if (grew) {
        added.emplace_back(a, b);
      }
    }
  }
  return added;
}

std::vector<Finding> validate_milestone(const Ledger& ledger, std::string_view name) {
  const Milestone* m = ledger.find_milestone(name);
  if (m == nullptr) {
    throw Error("unknown milestone '" + std::string(name) + "'");
  }
  std::vector<Finding> findings;

  bool has_report = false;
  bool has_snapshot = false;
  std::vector<const ArtifactRecord*> members;
  for (const auto& id : m->artifact_ids) {
    const ArtifactRecord* a = ledger.find_artifact(id);
    if (a == nullptr) {
      findings.push_back({Severity::error, "unknown-artifact",
                          "milestone member '" + id + "' is not in the ledger"});
      continue;
    }
    members.push_back(a);
    has_report = has_report || a->kind == ArtifactKind::report;
    has_snapshot = has_snapshot || a->kind == ArtifactKind::code_snapshot;
    if (a->pid.empty()) {
      findings.push_back(
          {Severity::error, "missing-pid", "artifact '" + id + "' has no pid"});
    }
    if (a->kind == ArtifactKind::code_snapshot && !a->vcs_tag.has_value()) {
      findings.push_back({Severity::error, "untagged-snapshot",
                          "code-snapshot '" + id + "' has no vcs_tag"});
    }
  }
  if (!has_report) {
    findings.push_back({Severity::error, "no-report", "milestone has no report artifact"});
  }
  if (!has_snapshot) {
    findings.push_back(
        {Severity::error, "no-code-snapshot", "milestone has no code-snapshot artifact"});
  }
  if (!validate_tag(m->tag)) {
    findings.push_back({Severity::error, "bad-tag",
                        "tag '" + m->tag + "' does not follow the naming convention"});
  }

  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const ArtifactRecord* a = members[i];
      const ArtifactRecord* b = members[j];
      const std::string pair_name = a->local_id + " <-> " + b->local_id;
      if (a->kind == ArtifactKind::live_repo || b->kind == ArtifactKind::live_repo) {
        const auto& live = a->kind == ArtifactKind::live_repo ? *a : *b;
        const auto& other = a->kind == ArtifactKind::live_repo ? *b : *a;
        if (!ledger.linked(live.local_id, other.local_id, LinkRelation::is_supplement_to)) {
          findings.push_back({Severity::error, "missing-link",
                              "pair " + pair_name + " has no IsSupplementTo link"});
        }
        continue;
      }
      const bool fwd = ledger.linked(a->local_id, b->local_id, LinkRelation::references);
      const bool rev = ledger.linked(b->local_id, a->local_id, LinkRelation::is_referenced_by);
      const bool fwd2 = ledger.linked(b->local_id, a->local_id, LinkRelation::references);
      const bool rev2 = ledger.linked(a->local_id, b->local_id, LinkRelation::is_referenced_by);
      if (!((fwd && rev) || (fwd2 && rev2))) {
        findings.push_back({Severity::error, "missing-link",
                            "pair " + pair_name + " lacks a reciprocal link pair"});
      }
    }
  }
  return findings;
}

std::string make_tag(int year, std::string_view venue, std::string_view topic,
                     std::optional<int> revision) {
  if (year < 1000 || year > 9999) {
    throw Error("year must have four digits");
  }
  auto slug_ok = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
      return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    });
  };
  if (!slug_ok(venue)) {
    throw Error("venue '" + std::string(venue) + "' must match [a-z0-9]+");
  }
  if (!slug_ok(topic)) {
    throw Error("topic '" + std::string(topic) + "' must match [a-z0-9]+");
  }
  std::string tag = std::to_string(year) + "-" + std::string(venue) + "-" + std::string(topic);
  if (revision) {
    if (*revision <= 0) {
      throw Error("revision must be positive");
    }
    tag += "-r" + std::to_string(*revision);
  }
  return tag;
}

bool validate_tag(std::string_view tag) {
  // ^[0-9]{4}-[a-z0-9]+-[a-z0-9]+(-r[0-9]+)?$, matched by hand to keep the
  // hot path regex-free.
  auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](unsigned char c) { return c >= '0' && c <= '9'; });
  };
  auto slug = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
      return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    });
  };
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t dash = tag.find('-', start);
    if (dash == std::string_view::npos) {
      parts.push_back(tag.substr(start));
      break;
    }
    parts.push_back(tag.substr(start, dash - start));
    start = dash + 1;
  }
  if (parts.size() != 3 && parts.size() != 4) {
    return false;
  }
  if (parts[0].size() != 4 || !digits(parts[0])) {
    return false;
  }
  if (!slug(parts[1]) || !slug(parts[2])) {
    return false;
  }
  if (parts.size() == 4) {
    std::string_view rev = parts[3];
    if (rev.size() < 2 || rev[0] != 'r' || !digits(rev.substr(1))) {
      return false;
    }
  }
  return true;
}

std::string render_repo_metadata(const Ledger& ledger, std::string_view local_id) {
  const ArtifactRecord* a = ledger.find_artifact(local_id);
  if (a == nullptr) {
    throw Error("unknown artifact '" + std::string(local_id) + "'");
  }
  ordered_json j;
  j["title"] = a->title;
  j["identifier"] = a->pid;
  j["kind"] = to_string(a->kind);
  if (a->version_label) {
    j["version"] = *a->version_label;
  }
  j["relatedIdentifiers"] = ordered_json::array();
  for (const auto& link : ledger.links) {
    if (link.from != a->local_id) {
      continue;
    }
    const ArtifactRecord* other = ledger.find_artifact(link.to);
    ordered_json entry;
    entry["relationType"] = to_string(link.relation);
    entry["relatedIdentifier"] = other != nullptr ? other->pid : std::string{};
    j["relatedIdentifiers"].push_back(std::move(entry));
  }
  j["dc.relation.isreferencedby"] = ordered_json::array();
  for (const auto& link : ledger.links) {
    if (link.to == a->local_id && link.relation == LinkRelation::references) {
      const ArtifactRecord* other = ledger.find_artifact(link.from);
      if (other != nullptr && !other->pid.empty()) {
        j["dc.relation.isreferencedby"].push_back(other->pid);
      }
    }
  }
  return j.dump(2) + "\n";
}

std::string readme_snippet(const Ledger& ledger, std::string_view milestone) {
  const Milestone* m = ledger.find_milestone(milestone);
  if (m == nullptr) {
    throw Error("unknown milestone '" + std::string(milestone) + "'");
  }
  std::ostringstream out;
  out << "## Published artifacts: " << m->name << "\n\n";
  for (const auto& id : m->artifact_ids) {
    const ArtifactRecord* a = ledger.find_artifact(id);
    if (a == nullptr) {
      continue;
    }
    out << "- " << to_string(a->kind) << ": " << a->title;
    if (a->version_label) {
      out << " (" << *a->version_label << ")";
    }
    if (is_doi(a->pid)) {
      out << " — <https://doi.org/" << a->pid << ">";
    } else {
      out << " — <" << a->pid << ">";
    }
    out << "\n";
  }
  out << "\nTagged `" << m->tag << "` in the code repository.\n";
  return out.str();
}

namespace {

/// Split "report-v3" into ("report", 3); plain ids count as version 1.
std::pair<std::string, int> split_version_suffix(const std::string& id) {
  std::size_t pos = id.rfind("-v");
  if (pos == std::string::npos || pos + 2 >= id.size()) {
    return {id, 1};
  }
  int k = 0;
  for (std::size_t i = pos + 2; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') {
      return {id, 1};
    }
    k = k * 10 + (id[i] - '0');
  }
  return {id.substr(0, pos), k};
}

}  // namespace

std::string new_version(Ledger& ledger, const std::string& artifact_id, const std::string& new_pid,
                        std::optional<std::string> version_label) {
  const ArtifactRecord* base = ledger.find_artifact(artifact_id);
  if (base == nullptr) {
    throw Error("unknown artifact '" + artifact_id + "'");
  }
  if (base->kind == ArtifactKind::live_repo) {
    throw Error("a live-repo is not versioned; its URL stays stable");
  }

  // Walk to the end of the version chain so repeated calls on the original
  // id keep extending it: report -> report-v2 -> report-v3.
  auto [stem, version] = split_version_suffix(artifact_id);
  const ArtifactRecord* tip = base;
  int next = version + 1;
  while (const ArtifactRecord* candidate =
             ledger.find_artifact(stem + "-v" + std::to_string(next))) {
    tip = candidate;
    ++next;
  }

  ArtifactRecord record;
  record.local_id = stem + "-v" + std::to_string(next);
  record.kind = tip->kind;
  record.pid = new_pid;
  record.title = tip->title;
  record.version_label = version_label ? *version_label : "v" + std::to_string(next);
  // add_artifact may grow the artifact vector and invalidate tip; take the
  // id before inserting.
  const std::string tip_id = tip->local_id;
  add_artifact(ledger, record);
  add_link(ledger, record.local_id, tip_id, LinkRelation::is_new_version_of);
  return record.local_id;
}

std::string ledger_to_json(const Ledger& ledger) {
  ordered_json j;
  j["artifacts"] = ordered_json::array();
  for (const auto& a : ledger.artifacts) {
    ordered_json e;
    e["local_id"] = a.local_id;
    e["kind"] = to_string(a.kind);
    e["pid"] = a.pid;
    e["title"] = a.title;
    if (a.version_label) {
      e["version_label"] = *a.version_label;
    }
    if (a.vcs_tag) {
      e["vcs_tag"] = *a.vcs_tag;
    }
    j["artifacts"].push_back(std::move(e));
  }
  j["links"] = ordered_json::array();
  for (const auto& l : ledger.links) {
    j["links"].push_back({{"from", l.from}, {"to", l.to}, {"relation", to_string(l.relation)}});
  }
  j["milestones"] = ordered_json::array();
  for (const auto& m : ledger.milestones) {
    j["milestones"].push_back(
        {{"name", m.name}, {"artifacts", m.artifact_ids}, {"tag", m.tag}});
  }
  return j.dump(2) + "\n";
}

Ledger ledger_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ledger is not valid JSON: ") + e.what());
  }
  Ledger ledger;
  try {
    for (const auto& e : j.value("artifacts", ordered_json::array())) {
      ArtifactRecord a;
      a.local_id = e.at("local_id").get<std::string>();
      a.kind = parse_artifact_kind(e.at("kind").get<std::string>());
      a.pid = e.value("pid", std::string{});
      a.title = e.value("title", std::string{});
      if (e.contains("version_label")) {
        a.version_label = e.at("version_label").get<std::string>();
      }
      if (e.contains("vcs_tag")) {
        a.vcs_tag = e.at("vcs_tag").get<std::string>();
      }
      if (ledger.find_artifact(a.local_id) != nullptr) {
        throw Error("duplicate artifact '" + a.local_id + "'");
      }
      ledger.artifacts.push_back(std::move(a));
    }
    for (const auto& e : j.value("links", ordered_json::array())) {
      ledger.links.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                              parse_link_relation(e.at("relation").get<std::string>())});
    }
    for (const auto& e : j.value("milestones", ordered_json::array())) {
      Milestone m;
      m.name = e.at("name").get<std::string>();
      m.artifact_ids = e.at("artifacts").get<std::vector<std::string>>();
      m.tag = e.value("tag", std::string{});
      ledger.milestones.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ledger field error: ") + e.what());
  }
  return ledger;
}

Ledger load_ledger(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return Ledger{};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return ledger_from_json(buf.str());
}

void save_ledger(const Ledger& ledger, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    out << ledger_to_json(ledger);
    out.flush();
    if (!out) {
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

LedgerLock::LedgerLock(const std::filesystem::path& ledger_path) {
  const std::string lock_path = ledger_path.string() + ".lock";
  fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error("cannot open lock file '" + lock_path + "'");
  }
  if (::flock(fd_, LOCK_EX) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error("cannot lock '" + lock_path + "'");
  }
}

LedgerLock::~LedgerLock() {
  if (fd_ >= 0) {
    ::close(fd_);  // releases the flock
  }
}

}  // namespace studyforge
