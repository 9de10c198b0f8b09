#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "studyforge/finding.hpp"

namespace studyforge {

enum class ArtifactKind {
  code_snapshot,
  report,
  secondary_data,
  primary_data,
  image,
  recipe,
  live_repo,
};

/// DataCite-style relation names. References/IsReferencedBy are inverse
/// relations and always stored as a reciprocal pair; IsSupplementTo and
/// IsNewVersionOf are stored one-way.
enum class LinkRelation { references, is_referenced_by, is_supplement_to, is_new_version_of };

std::string to_string(ArtifactKind k);
std::string to_string(LinkRelation r);
ArtifactKind parse_artifact_kind(std::string_view text);
LinkRelation parse_link_relation(std::string_view text);

/// One ledger entry. The pid is a DOI ("10.<registrant>/<suffix>") or URL;
/// live_repo artifacts have no persistent identifier, so their pid is the
/// hosting URL.
struct ArtifactRecord {
  std::string local_id;
  ArtifactKind kind = ArtifactKind::secondary_data;
  std::string pid;
  std::string title;
  std::optional<std::string> version_label;
  std::optional<std::string> vcs_tag;

  bool operator==(const ArtifactRecord&) const = default;
};

struct Link {
  std::string from;  // local_id
  std::string to;    // local_id
  LinkRelation relation = LinkRelation::references;

  bool operator==(const Link&) const = default;
};

struct Milestone {
  std::string name;
  std::vector<std::string> artifact_ids;  // insertion order, unique
  std::string tag;

  bool operator==(const Milestone&) const = default;
};

struct Ledger {
  std::vector<ArtifactRecord> artifacts;  // insertion order
  std::vector<Link> links;
  std::vector<Milestone> milestones;

  const ArtifactRecord* find_artifact(std::string_view local_id) const;
  const Milestone* find_milestone(std::string_view name) const;
  bool linked(std::string_view from, std::string_view to, LinkRelation r) const;

  bool operator==(const Ledger&) const = default;
};

bool is_doi(std::string_view pid);
bool is_url(std::string_view pid);

/// Append an artifact. Throws Error on a duplicate local_id, an empty pid,
/// a pid that is neither DOI- nor URL-shaped, or a live_repo whose pid is
/// not a URL.
void add_artifact(Ledger& ledger, ArtifactRecord record);

/// Record a directed link. References and IsReferencedBy store their
/// reciprocal automatically; the other relations stay one-way. Re-adding an
/// existing edge is a no-op. Throws Error on unknown ids or self-links.
void add_link(Ledger& ledger, const std::string& from, const std::string& to,
              LinkRelation relation);

/// Register a milestone over existing artifacts (no links added; see
/// cross_link_mesh). Requires ≥1 report and ≥1 code_snapshot among the
/// members, unique known ids, and a tag passing validate_tag.
void define_milestone(Ledger& ledger, const std::string& name,
                      const std::vector<std::string>& artifact_ids, const std::string& tag);

/// Complete the milestone's link mesh: every unordered member pair not yet
/// linked gains References(earlier, later) plus its reciprocal. Pairs
/// involving a live_repo member instead gain a one-way
/// IsSupplementTo(live_repo, other). Idempotent; returns the pairs newly
/// linked. Throws Error on an unknown milestone.
std::vector<std::pair<std::string, std::string>> cross_link_mesh(Ledger& ledger,
                                                                 const std::string& milestone);

/// Check a milestone: members exist, every pair is linked (reciprocally,
/// except live_repo pairs), every member has a pid, kinds include a report
/// and a code snapshot, code snapshots carry a vcs_tag, and the tag follows
/// the convention. Throws Error on an unknown milestone.
std::vector<Finding> validate_milestone(const Ledger& ledger, std::string_view name);

/// Compose a milestone tag: <year>-<venue>-<topic>[-r<revision>]. Venue and
/// topic must match [a-z0-9]+; year must have four digits; revision, when
/// given, must be positive.
std::string make_tag(int year, std::string_view venue, std::string_view topic,
                     std::optional<int> revision = std::nullopt);

/// True iff s matches ^[0-9]{4}-[a-z0-9]+-[a-z0-9]+(-r[0-9]+)?$.
bool validate_tag(std::string_view tag);

/// JSON metadata record for one artifact: title, identifier,
/// relatedIdentifiers (one entry per outgoing link, with relationType and
/// counterpart PID), and the flat `dc.relation.isreferencedby` list carrying
/// the PIDs of artifacts that reference it. Throws Error on unknown ids.
std::string render_repo_metadata(const Ledger& ledger, std::string_view local_id);

/// Markdown section for a README: one bullet per milestone artifact (kind,
/// title, PID as a link) plus the milestone tag line.
std::string readme_snippet(const Ledger& ledger, std::string_view milestone);

/// Register a new version at the end of the artifact's version chain
/// (ids <base>-v2, -v3, ...), linked IsNewVersionOf its predecessor, kind
/// and title inherited, the old record untouched. Returns the new local_id.
std::string new_version(Ledger& ledger, const std::string& artifact_id, const std::string& new_pid,
                        std::optional<std::string> version_label = std::nullopt);

/// Load a ledger file; a missing file yields an empty ledger. Structural
/// problems (bad JSON, duplicate ids, unknown kind names) throw; semantic
/// drift left by hand edits is the business of validate_milestone.
Ledger load_ledger(const std::filesystem::path& path);

/// Persist atomically (temp file + rename).
void save_ledger(const Ledger& ledger, const std::filesystem::path& path);

std::string ledger_to_json(const Ledger& ledger);
Ledger ledger_from_json(const std::string& text);

/// Advisory lock (flock on <path>.lock) held for a load-modify-save cycle.
class LedgerLock {
 public:
  explicit LedgerLock(const std::filesystem::path& ledger_path);
  ~LedgerLock();
  LedgerLock(const LedgerLock&) = delete;
  LedgerLock& operator=(const LedgerLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace studyforge
