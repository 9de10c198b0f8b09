// Acceptance gate: one timed pass/fail line per criterion, nonzero exit when
// any criterion fails. argv[1] must point at the studyforge CLI binary (the
// end-to-end criterion drives the real executable).

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "studyforge/crosslink.hpp"
#include "studyforge/finding.hpp"
#include "studyforge/recipe_lint.hpp"
#include "studyforge/regression.hpp"
#include "studyforge/scalar.hpp"
#include "studyforge/secondary_table.hpp"
#include "studyforge/study_model.hpp"
#include "test_util.hpp"

using namespace studyforge;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::string kDataDir = STUDYFORGE_TEST_DATA_DIR;

struct Criterion {
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      failures.push_back(what);
    }
  }
};

std::string fmt_count(std::size_t n, const char* noun) {
  return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

// ---------------------------------------------------------------------------
// 1. Paper-table fidelity: transcription validates cleanly, groups into the
//    two optimizer-step families, and the filtered lookup hits one row.

Criterion criterion_paper_table() {
  Criterion c;
  const auto table = read_table(testutil::slurp(kDataDir + "/nn_tuning_secondary.csv"));

  const auto findings = validate_table(table);
  c.require(findings.empty(), "validate_table returned " + fmt_count(findings.size(), "finding"));

  const auto groups = group_by_metadata(table);
  c.require(groups.size() == 2,
            "group_by_metadata returned " + fmt_count(groups.size(), "group") + ", wanted 2");

  const auto hit = filter_rows(table, {{"PARAM_OPTIMIZER_STEP", "0.0001"}, {"EPOCH", "1"}});
  c.require(hit.rows.size() == 1,
            "filter returned " + fmt_count(hit.rows.size(), "row") + ", wanted 1");
  if (hit.rows.size() == 1) {
    const auto mse = hit.column_index("TRAINING_MSE");
    c.require(mse && hit.rows[0][*mse].text == "1.091560",
              "filtered TRAINING_MSE is '" + (mse ? hit.rows[0][*mse].text : "?") +
                  "', wanted '1.091560'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 2. Expansion properties over 200 random spaces: cardinality, determinism,
//    distinctness.

std::vector<std::string> case_signatures(const StudyPlan& plan) {
  std::vector<std::string> sigs;
  for (const auto& cs : plan.cases) {
    std::string sig;
    for (const auto& name : plan.parameter_names) {
      sig += name + "=" + cs.vector.at(name).render() + "|";
    }
    sigs.push_back(std::move(sig));
  }
  return sigs;
}

Criterion criterion_expansion() {
  Criterion c;
  testutil::RNG rng(20260819);
  for (int i = 0; i < 200 && c.failures.empty(); ++i) {
    StudyDefinition def;
    def.study_name = "space" + std::to_string(i);
    def.space = testutil::rand_space(rng, 4, 5);
    def.command_template = "true";
    def.secondary_file = "out.csv";

    const auto plan = expand(def);
    const auto expected = testutil::space_cardinality(def.space);
    c.require(plan.cases.size() == expected,
              "space " + std::to_string(i) + ": " + std::to_string(plan.cases.size()) +
                  " cases, product says " + std::to_string(expected));

    const auto sigs = case_signatures(plan);
    c.require(std::set<std::string>(sigs.begin(), sigs.end()).size() == sigs.size(),
              "space " + std::to_string(i) + ": case vectors are not all distinct");
    c.require(case_signatures(expand(def)) == sigs,
              "space " + std::to_string(i) + ": repeated expansion changed the order");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 3. Collection provenance over 100 random plans: merged PARAM_ cells mirror
//    each case's vector, and nothing is lost or invented.

Criterion criterion_collection() {
  Criterion c;
  testutil::RNG rng(907);
  std::uint64_t serial = 0;
  for (int i = 0; i < 100 && c.failures.empty(); ++i) {
    const auto def = testutil::rand_definition(rng, 3, 4);
    const auto plan = expand(def);
    const auto columns = testutil::rand_data_columns(rng);

    std::map<std::int64_t, SecondaryTable> per_case;
    std::size_t total_rows = 0;
    for (const auto& cs : plan.cases) {
      auto t = testutil::rand_data_table(rng, serial, columns);
      total_rows += t.rows.size();
      per_case.emplace(cs.case_id, std::move(t));
    }

    const auto merged = collect(plan, per_case);
    c.require(merged.rows.size() == total_rows,
              "plan " + std::to_string(i) + ": merged " + std::to_string(merged.rows.size()) +
                  " rows, cases contributed " + std::to_string(total_rows));

    std::size_t offset = 0;
    for (const auto& cs : plan.cases) {
      const auto& t = per_case.at(cs.case_id);
      for (std::size_t r = 0; r < t.rows.size(); ++r, ++offset) {
        for (const auto& name : plan.parameter_names) {
          const auto idx = merged.column_index("PARAM_" + name);
          if (!idx) {
            c.require(false, "plan " + std::to_string(i) + ": no PARAM_" + name + " column");
            continue;
          }
          const auto& cell = merged.rows.at(offset)[*idx];
          c.require(cell.text == cs.vector.at(name).render(),
                    "plan " + std::to_string(i) + " case " + std::to_string(cs.case_id) +
                        ": PARAM_" + name + " cell '" + cell.text + "' != vector value '" +
                        cs.vector.at(name).render() + "'");
        }
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 4. Comparator oracle equivalence on 100 random 50x5 tables, plus the
//    reflexive and injected-deviation exemplars.

using CellRef = std::pair<std::string, std::size_t>;  // column name, row index

std::set<CellRef> oracle_failures(const SecondaryTable& actual, const SecondaryTable& reference,
                                  const ToleranceSpec& tol) {
  std::set<CellRef> failing;
  for (std::size_t ci = 0; ci < reference.columns.size(); ++ci) {
    const auto& name = reference.columns[ci];
    const auto ai = actual.column_index(name);
    for (std::size_t r = 0; r < reference.rows.size(); ++r) {
      const auto& a = actual.rows[r][*ai];
      const auto& b = reference.rows[r][ci];
      if (!values_close(*a.number, *b.number, tol.resolve(name), tol.nan_equal)) {
        failing.insert({name, r});
      }
    }
  }
  return failing;
}

std::set<CellRef> report_failures(const ComparisonReport& report) {
  std::set<CellRef> failing;
  for (const auto& col : report.columns) {
    for (const auto r : col.failing_rows) {
      failing.insert({col.column, r});
    }
  }
  return failing;
}

Criterion criterion_comparator() {
  Criterion c;
  testutil::RNG rng(424242);
  const ToleranceSpec tol;  // rel 1e-6, abs 1e-12

  for (int i = 0; i < 100 && c.failures.empty(); ++i) {
    const auto reference = testutil::rand_numeric_table(rng, 50, 5);

    // Reflexive self-compare passes.
    if (i == 0) {
      c.require(compare_tables(reference, reference, tol).passed(),
                "reflexive self-compare did not pass");
    }

    auto actual = reference;
    for (auto& row : actual.rows) {
      for (std::size_t ci = 0; ci < row.size(); ++ci) {
        const int roll = testutil::rand_int(rng, 0, 9);
        const double v = *row[ci].number;
        double next = v;
        if (roll == 0) {
          next = v * (1.0 + 1e-8);  // inside tolerance
        } else if (roll == 1) {
          next = v + std::max(std::fabs(v), 1.0) * 1e-3;  // far outside
        } else if (roll == 2) {
          next = v + testutil::rand_double(rng, -1.0, 1.0);  // let the oracle decide
        }
        if (next != v) {
          row[ci] = Cell::of(render_double(next));
        }
      }
    }

    const auto report = compare_tables(actual, reference, tol);
    const auto expected = oracle_failures(actual, reference, tol);
    const auto got = report_failures(report);
    c.require(got == expected, "table " + std::to_string(i) + ": comparator flagged " +
                                   fmt_count(got.size(), "cell") + ", oracle says " +
                                   fmt_count(expected.size(), "cell"));
    c.require(report.passed() == expected.empty(),
              "table " + std::to_string(i) + ": verdict disagrees with the oracle");
  }

  // A single injected deviation of 1000x the relative tolerance is pinned to
  // its column and row.
  for (int i = 0; i < 20 && c.failures.empty(); ++i) {
    const auto reference = testutil::rand_numeric_table(rng, 50, 5);
    auto actual = reference;
    const std::size_t col = static_cast<std::size_t>(testutil::rand_int(rng, 1, 4));
    const std::size_t row = static_cast<std::size_t>(testutil::rand_int(rng, 0, 49));
    const double v = *actual.rows[row][col].number;
    actual.rows[row][col] =
        Cell::of(render_double(v + 1000.0 * tol.defaults.rel * std::max(std::fabs(v), 1.0)));

    const auto report = compare_tables(actual, reference, tol);
    const auto failing = report_failures(report);
    c.require(failing == std::set<CellRef>{{reference.columns[col], row}},
              "injected deviation at " + reference.columns[col] + " row " + std::to_string(row) +
                  " was reported as " + fmt_count(failing.size(), "cell"));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 5. Cross-link mesh for n in {2,3,5,8}: C(n,2) pairs, clean validation,
//    idempotence, and n-1 counterpart PIDs in each rendered record.

Criterion criterion_crosslink() {
  Criterion c;
  for (const std::size_t n : {2u, 3u, 5u, 8u}) {
    Ledger ledger;
    std::vector<std::string> ids;
    std::vector<std::string> pids;
    for (std::size_t i = 0; i < n; ++i) {
      ArtifactRecord rec;
      rec.local_id = "art" + std::to_string(i);
      rec.kind = i == 0 ? ArtifactKind::code_snapshot
                        : (i == 1 ? ArtifactKind::report : ArtifactKind::secondary_data);
      rec.pid = "10.5072/zenodo." + std::to_string(1000 + i);
      rec.title = "Artifact " + std::to_string(i);
      if (rec.kind == ArtifactKind::code_snapshot) {
        rec.vcs_tag = "2026-sim-demo";
      }
      add_artifact(ledger, rec);
      ids.push_back(rec.local_id);
      pids.push_back(rec.pid);
    }
    define_milestone(ledger, "release", ids, "2026-sim-demo");

    const auto pairs = cross_link_mesh(ledger, "release");
    const std::size_t expected_pairs = n * (n - 1) / 2;
    c.require(pairs.size() == expected_pairs,
              "n=" + std::to_string(n) + ": " + fmt_count(pairs.size(), "pair") + ", wanted C(n,2)=" +
                  std::to_string(expected_pairs));

    const auto findings = validate_milestone(ledger, "release");
    c.require(findings.empty(), "n=" + std::to_string(n) + ": validate_milestone found " +
                                    fmt_count(findings.size(), "issue"));

    c.require(cross_link_mesh(ledger, "release").empty(),
              "n=" + std::to_string(n) + ": second mesh added links");

    for (std::size_t i = 0; i < n; ++i) {
      const auto record = render_repo_metadata(ledger, ids[i]);
      c.require(record.find("dc.relation.isreferencedby") != std::string::npos,
                "n=" + std::to_string(n) + ": record " + ids[i] +
                    " lacks the dc.relation.isreferencedby field");
      const auto j = ordered_json::parse(record);
      std::set<std::string> counterparts;
      for (const auto& entry : j["relatedIdentifiers"]) {
        counterparts.insert(entry["relatedIdentifier"].get<std::string>());
      }
      std::set<std::string> expected(pids.begin(), pids.end());
      expected.erase(pids[i]);
      c.require(counterparts.size() == n - 1 && counterparts == expected,
                "n=" + std::to_string(n) + ": record " + ids[i] + " lists " +
                    fmt_count(counterparts.size(), "counterpart PID") + ", wanted n-1");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 6. Recipe lint golden corpus plus a 10,000-input fuzz run.

Criterion criterion_recipe_lint() {
  Criterion c;
  const auto dirty = lint_text(testutil::slurp(kDataDir + "/recipes/dirty.recipe"));
  c.require(dirty.size() == 4,
            "dirty recipe produced " + fmt_count(dirty.size(), "finding") + ", wanted 4");
  const std::vector<std::pair<std::string, int>> expected = {
      {"R1-unpinned-base", 1}, {"R2-host-copy", 2}, {"R3-mutable-fetch", 3},
      {"R4-unpinned-package", 4}};
  for (std::size_t i = 0; i < dirty.size() && i < expected.size(); ++i) {
    c.require(rule_id(dirty[i].rule) == expected[i].first &&
                  dirty[i].line == expected[i].second,
              "dirty finding " + std::to_string(i) + " is " + rule_id(dirty[i].rule) + " at line " +
                  std::to_string(dirty[i].line) + ", wanted " + expected[i].first + " at line " +
                  std::to_string(expected[i].second));
  }

  const auto clean = lint_text(testutil::slurp(kDataDir + "/recipes/clean.recipe"));
  c.require(clean.empty(),
            "clean recipe produced " + fmt_count(clean.size(), "finding") + ", wanted 0");

  testutil::RNG rng(6502);
  for (int i = 0; i < 10000; ++i) {
    std::string noise;
    const int len = testutil::rand_int(rng, 0, 300);
    for (int b = 0; b < len; ++b) {
      noise.push_back(static_cast<char>(testutil::rand_int(rng, 0, 255)));
    }
    try {
      lint_text(noise);
    } catch (const std::exception& e) {
      c.require(false, "fuzz input " + std::to_string(i) + " threw: " + e.what());
      break;
    } catch (...) {
      c.require(false, "fuzz input " + std::to_string(i) + " threw a non-std exception");
      break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 7. End-to-end toy study through the real CLI binary.

Criterion criterion_end_to_end(const std::string& cli) {
  Criterion c;
  testutil::TempDir root("acceptance-e2e");
  const std::string at_root = " --root '" + root.path().string() + "'";
  const fs::path study_dir = root.path() / "quadratic";
  const fs::path log = root.path() / "cli.log";

  const auto step = [&](const std::string& args) {
    const std::string cmd =
        "STUDYFORGE_ROOT= '" + cli + "' " + args + " >> '" + log.string() + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    const bool ok = rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
    if (!ok) {
      c.require(false, "`" + args + "` failed: " + testutil::slurp(log));
    }
    return ok;
  };

  const bool drove =
      step("plan '" + kDataDir + "/quadratic_study.yaml'" + at_root) &&
      step("run quadratic" + at_root) && step("collect quadratic" + at_root) &&
      step("validate '" + (study_dir / "secondary.csv").string() + "'") &&
      step("compare --reference '" + kDataDir + "/quadratic_reference.csv' --actual '" +
           (study_dir / "secondary.csv").string() + "'") &&
      step("report --study quadratic" + at_root + " --reference '" + kDataDir +
           "/quadratic_reference.csv'") &&
      step("metadata quadratic" + at_root + " --timestamp 1700000000") &&
      step("pack secondary" + at_root + " --out '" + (root.path() / "sec-a.tar.gz").string() +
           "' --timestamp 1700000000") &&
      step("pack secondary" + at_root + " --out '" + (root.path() / "sec-b.tar.gz").string() +
           "' --timestamp 1700000000");

  if (drove) {
    // The planted primary-glob file exists but stays out of the archive.
    c.require(fs::exists(study_dir / "0" / "dump.bin"),
              "cases did not plant dump.bin; the exclusion check would be vacuous");
    const std::string manifest = testutil::slurp(root.path() / "sec-a.tar.gz.manifest.json");
    c.require(!manifest.empty(), "no manifest was written next to the archive");
    c.require(manifest.find("dump.bin") == std::string::npos,
              "secondary archive contains the planted primary-glob file dump.bin");
    c.require(manifest.find("quadratic/secondary.csv") != std::string::npos,
              "secondary archive is missing quadratic/secondary.csv");

    const std::string a = testutil::slurp(root.path() / "sec-a.tar.gz");
    const std::string b = testutil::slurp(root.path() / "sec-b.tar.gz");
    c.require(!a.empty() && a == b,
              "fixed-timestamp archives are not byte-identical across regeneration");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 8. Tag convention: composed tags validate; the exemplars behave.

Criterion criterion_tags() {
  Criterion c;
  testutil::RNG rng(1789);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  const auto slug = [&]() {
    std::string s;
    const int len = testutil::rand_int(rng, 1, 8);
    for (int i = 0; i < len; ++i) {
      s.push_back(alphabet[static_cast<std::size_t>(
          testutil::rand_int(rng, 0, static_cast<int>(alphabet.size()) - 1))]);
    }
    return s;
  };

  for (int i = 0; i < 1000 && c.failures.empty(); ++i) {
    const int year = testutil::rand_int(rng, 1000, 9999);
    const std::string venue = slug();
    const std::string topic = slug();
    std::optional<int> revision;
    if (testutil::rand_int(rng, 0, 1) == 1) {
      revision = testutil::rand_int(rng, 1, 99);
    }
    const auto tag = make_tag(year, venue, topic, revision);
    c.require(validate_tag(tag), "make_tag produced '" + tag + "' which does not validate");
  }

  c.require(validate_tag("2022-jcp-ccs-r1"), "'2022-jcp-ccs-r1' should validate");
  c.require(!validate_tag("22-jcp-ccs"), "'22-jcp-ccs' should not validate");
  c.require(!validate_tag("2022-JCP-ccs"), "'2022-JCP-ccs' should not validate");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-studyforge-binary>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];

  struct Entry {
    const char* name;
    double bound_seconds;
    std::function<Criterion()> run;
  };
  const std::vector<Entry> entries = {
      {"paper-table fidelity", 1.0, criterion_paper_table},
      {"expansion properties", 5.0, criterion_expansion},
      {"collection provenance", 5.0, criterion_collection},
      {"comparator oracle equivalence", 10.0, criterion_comparator},
      {"cross-link mesh", 1.0, criterion_crosslink},
      {"recipe lint golden corpus", 10.0, criterion_recipe_lint},
      {"end-to-end toy study", 10.0, [&] { return criterion_end_to_end(cli); }},
      {"tag convention", 1.0, criterion_tags},
  };

  int failed = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Criterion result;
    try {
      result = entries[i].run();
    } catch (const std::exception& e) {
      result.require(false, std::string("unexpected exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= entries[i].bound_seconds) {
      result.require(false, "took " + std::to_string(elapsed) + " s, bound is " +
                                std::to_string(entries[i].bound_seconds) + " s");
    }
    if (result.failures.empty()) {
      std::printf("criterion %zu: PASS — %s (%.2f s)\n", i + 1, entries[i].name, elapsed);
    } else {
      ++failed;
      std::printf("criterion %zu: FAIL — %s (%.2f s): %s\n", i + 1, entries[i].name, elapsed,
                  result.failures.front().c_str());
      for (std::size_t f = 1; f < result.failures.size() && f < 4; ++f) {
        std::printf("             - %s\n", result.failures[f].c_str());
      }
    }
  }

  if (failed == 0) {
    std::printf("acceptance: all %zu criteria passed\n", entries.size());
    return 0;
  }
  std::printf("acceptance: %d of %zu criteria FAILED\n", failed, entries.size());
  return 1;
}
