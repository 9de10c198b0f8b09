#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Run the installed binary through the shell, capturing stdout/stderr.
/// The default prefix blanks STUDYFORGE_ROOT so ambient values cannot leak in.
CliResult run_cli(const std::string& args, const std::string& env_prefix = "STUDYFORGE_ROOT= ") {
  static testutil::TempDir capture("cli-capture");
  static std::atomic<int> seq{0};
  const int n = seq.fetch_add(1);
  const fs::path out = capture.path() / ("out-" + std::to_string(n));
  const fs::path err = capture.path() / ("err-" + std::to_string(n));
  const std::string cmd = env_prefix + "'" + STUDYFORGE_BIN + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  CliResult r;
  r.exit_code = WEXITSTATUS(rc);
  r.out = testutil::slurp(out);
  r.err = testutil::slurp(err);
  return r;
}

ordered_json parse_json(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const std::exception& e) {
    REQUIRE_MESSAGE(false, "not valid JSON (", e.what(), "): ", text);
    return {};
  }
}

const std::string kDataDir = STUDYFORGE_TEST_DATA_DIR;

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run_cli("").exit_code == 2);                       // a subcommand is required
  CHECK(run_cli("frobnicate").exit_code == 2);             // unknown subcommand
  CHECK(run_cli("compare --reference x.csv").exit_code == 2);  // missing required option
  CHECK(run_cli("plan /nonexistent/def.yaml").exit_code == 2);
  CHECK(run_cli("run nothing-here --root /nonexistent").exit_code == 2);

  const auto version = run_cli("--version");
  CHECK(version.exit_code == 0);
  CHECK(version.out == "0.1.0\n");
}

TEST_CASE("cli: quadratic study end to end") {
  testutil::TempDir root("cli-quad");
  const std::string at_root = " --root " + q(root.path());
  const fs::path study_dir = root.path() / "quadratic";
  const std::string def = q(kDataDir + "/quadratic_study.yaml");
  const std::string reference = q(kDataDir + "/quadratic_reference.csv");

  // plan
  auto plan = run_cli("plan " + def + at_root + " --format json");
  REQUIRE_MESSAGE(plan.exit_code == 0, plan.err);
  auto pj = parse_json(plan.out);
  CHECK(pj["study"] == "quadratic");
  CHECK(pj["case_count"] == 6);
  CHECK(fs::exists(study_dir / "case_map.csv"));

  // planning again without --force refuses; with --force it replaces
  auto replan = run_cli("plan " + def + at_root);
  CHECK(replan.exit_code == 2);
  CHECK(replan.err.find("already exists") != std::string::npos);
  CHECK(run_cli("plan " + def + at_root + " --force").exit_code == 0);

  // run: all six cases succeed, and the report is persisted
  auto run = run_cli("run quadratic" + at_root + " --format json");
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);
  auto rj = parse_json(run.out);
  CHECK(rj["counts"]["succeeded"] == 6);
  CHECK(rj["counts"]["failed"] == 0);
  CHECK(fs::exists(study_dir / "run_report.json"));
  parse_json(testutil::slurp(study_dir / "run_report.json"));

  // collect
  auto collect = run_cli("collect quadratic" + at_root);
  REQUIRE_MESSAGE(collect.exit_code == 0, collect.err);
  CHECK(collect.out.find("collected 6 rows from 6 of 6 cases") != std::string::npos);
  REQUIRE(fs::exists(study_dir / "secondary.csv"));

  // validate: clean table, exit 0, parseable JSON
  auto validate = run_cli("validate " + q(study_dir / "secondary.csv") + " --format json");
  CHECK(validate.exit_code == 0);
  CHECK(parse_json(validate.out)["findings"].empty());

  // compare against the committed reference: pass
  auto compare = run_cli("compare --reference " + reference + " --actual " +
                         q(study_dir / "secondary.csv") + " --format json");
  CHECK(compare.exit_code == 0);
  CHECK(parse_json(compare.out)["status"] == "pass");

  // a tampered reference fails with exit 1 — stdout still valid JSON
  std::string tampered = testutil::slurp(kDataDir + "/quadratic_reference.csv");
  tampered.replace(tampered.find("25"), 2, "26");
  testutil::spit(root.path() / "tampered.csv", tampered);
  auto bad = run_cli("compare --reference " + q(root.path() / "tampered.csv") + " --actual " +
                     q(study_dir / "secondary.csv") + " --format json --report " +
                     q(root.path() / "cmp.json"));
  CHECK(bad.exit_code == 1);
  CHECK(parse_json(bad.out)["status"] == "fail");
  CHECK(parse_json(testutil::slurp(root.path() / "cmp.json"))["status"] == "fail");

  // report with embedded regression verdict and a chart
  auto report = run_cli("report --study quadratic" + at_root + " --reference " + reference +
                        " --chart y=Y,x=X");
  REQUIRE_MESSAGE(report.exit_code == 0, report.err);
  const std::string html = testutil::slurp(study_dir / "report.html");
  CHECK(html.find("PASS") != std::string::npos);
  CHECK(html.find("<svg") != std::string::npos);

  // metadata export
  auto metadata = run_cli("metadata quadratic" + at_root + " --timestamp 1700000000");
  REQUIRE_MESSAGE(metadata.exit_code == 0, metadata.err);
  auto mj = parse_json(testutil::slurp(study_dir / "study_metadata.json"));
  CHECK(mj["tool_version"] == "0.1.0");
  CHECK(mj["collected_cases"].size() == 6);

  // pack secondary: dump.bin matches a primary glob and stays out
  auto pack2 = run_cli("pack secondary" + at_root + " --out " + q(root.path() / "sec.tar.gz") +
                       " --timestamp 1700000000 --format json");
  REQUIRE_MESSAGE(pack2.exit_code == 0, pack2.err);
  const std::string sec_manifest = testutil::slurp(root.path() / "sec.tar.gz.manifest.json");
  CHECK(sec_manifest.find("dump.bin") == std::string::npos);
  CHECK(sec_manifest.find("quadratic/secondary.csv") != std::string::npos);
  CHECK(sec_manifest.find("quadratic/study_metadata.json") != std::string::npos);

  // pack primary: the raw case outputs, dump.bin included
  auto pack1 = run_cli("pack primary" + at_root + " --study quadratic --out " +
                       q(root.path() / "pri.tar.gz"));
  REQUIRE_MESSAGE(pack1.exit_code == 0, pack1.err);
  CHECK(testutil::slurp(root.path() / "pri.tar.gz.manifest.json").find("quadratic/0/dump.bin") !=
        std::string::npos);

  // index page
  auto index = run_cli("report" + at_root);
  CHECK(index.exit_code == 0);
  CHECK(testutil::slurp(root.path() / "index.html").find("quadratic/report.html") !=
        std::string::npos);
}

TEST_CASE("cli: failing cases exit 3 and persist the run report") {
  testutil::TempDir root("cli-flaky");
  testutil::spit(root.path() / "flaky.yaml",
                 "study: flaky\n"
                 "parameters:\n"
                 "  n: [0, 1]\n"
                 "command: 'exit {n}'\n"
                 "secondary_file: out.csv\n");
  const std::string at_root = " --root " + q(root.path());

  REQUIRE(run_cli("plan " + q(root.path() / "flaky.yaml") + at_root).exit_code == 0);
  auto run = run_cli("run flaky" + at_root + " --format json");
  CHECK(run.exit_code == 3);
  auto rj = parse_json(run.out);  // stdout stays parseable on the failure path
  CHECK(rj["counts"]["succeeded"] == 1);
  CHECK(rj["counts"]["failed"] == 1);
  CHECK(fs::exists(root.path() / "flaky" / "run_report.json"));
}

TEST_CASE("cli: STUDYFORGE_ROOT supplies the default root") {
  testutil::TempDir root("cli-env");
  const std::string env = "STUDYFORGE_ROOT=" + q(root.path()) + " ";

  auto plan = run_cli("plan '" + kDataDir + "/quadratic_study.yaml'", env);
  REQUIRE_MESSAGE(plan.exit_code == 0, plan.err);
  CHECK(fs::exists(root.path() / "quadratic" / "case_map.csv"));

  auto status = run_cli("status quadratic", env);
  CHECK(status.exit_code == 0);
  CHECK(status.out.find("6 pending") != std::string::npos);
}

TEST_CASE("cli: stop blocks launches until cleared") {
  testutil::TempDir root("cli-stop");
  const std::string at_root = " --root " + q(root.path());
  REQUIRE(run_cli("plan '" + kDataDir + "/quadratic_study.yaml'" + at_root).exit_code == 0);

  auto stop = run_cli("stop quadratic" + at_root);
  CHECK(stop.exit_code == 0);
  CHECK(stop.out.find("stop requested") != std::string::npos);
  CHECK(fs::exists(root.path() / "quadratic" / "STOP"));

  // With the marker in place, a run drains every case as stopped.
  auto run = run_cli("run quadratic" + at_root + " --format json");
  CHECK(run.exit_code == 0);
  CHECK(parse_json(run.out)["counts"]["stopped"] == 6);

  auto clear = run_cli("stop quadratic --clear" + at_root);
  CHECK(clear.exit_code == 0);
  CHECK(clear.out.find("cleared") != std::string::npos);
  CHECK_FALSE(fs::exists(root.path() / "quadratic" / "STOP"));

  // Stopped is terminal: clearing the marker alone reruns nothing.
  auto rerun = run_cli("run quadratic" + at_root + " --format json");
  CHECK(rerun.exit_code == 0);
  CHECK(parse_json(rerun.out)["counts"]["stopped"] == 6);

  // A fresh plan is the way back to a runnable study.
  REQUIRE(run_cli("plan '" + kDataDir + "/quadratic_study.yaml'" + at_root + " --force")
              .exit_code == 0);
  auto fresh = run_cli("run quadratic" + at_root + " --format json");
  CHECK(fresh.exit_code == 0);
  CHECK(parse_json(fresh.out)["counts"]["succeeded"] == 6);
}

TEST_CASE("cli: recipe lint exit codes") {
  const std::string dirty = q(kDataDir + "/recipes/dirty.recipe");
  const std::string clean = q(kDataDir + "/recipes/clean.recipe");
  const std::string warn_only = q(kDataDir + "/recipes/r4_unpinned_package.recipe");
  const std::string clone = q(kDataDir + "/recipes/r3_mutable_fetch.recipe");

  auto bad = run_cli("lint-recipe " + dirty + " --format json");
  CHECK(bad.exit_code == 1);
  auto bj = parse_json(bad.out);
  CHECK(bj["findings"].size() == 4);
  CHECK(bj["errors"] == 3);
  CHECK(bj["warnings"] == 1);

  auto text = run_cli("lint-recipe " + dirty);
  CHECK(text.exit_code == 1);
  CHECK(text.out.find("[R1-unpinned-base]") != std::string::npos);
  CHECK(text.out.find("3 error(s), 1 warning(s)") != std::string::npos);

  CHECK(run_cli("lint-recipe " + clean).exit_code == 0);
  CHECK(run_cli("lint-recipe " + warn_only).exit_code == 0);      // warnings alone pass
  CHECK(run_cli("lint-recipe " + warn_only + " --strict").exit_code == 1);
  // Allowlisting the clone host downgrades the finding to a warning.
  CHECK(run_cli("lint-recipe " + clone + " --allow-host github.com").exit_code == 0);
}

TEST_CASE("cli: artifact linking workflow") {
  testutil::TempDir tmp("cli-link");
  const std::string ledger = " --ledger " + q(tmp.path() / "crosslink.json");

  auto add = [&](const std::string& rest) {
    return run_cli("link add" + ledger + " " + rest);
  };
  auto first = add("--id code --kind code-snapshot --pid 10.5072/zenodo.11 --title Code "
                   "--vcs-tag 2026-sim-demo");
  REQUIRE_MESSAGE(first.exit_code == 0, first.err);
  CHECK(first.out.find("added artifact 'code'") != std::string::npos);
  REQUIRE(add("--id data --kind secondary-data --pid 10.5072/zenodo.12 --title Data")
              .exit_code == 0);
  REQUIRE(add("--id rep --kind report --pid 10.5072/zenodo.13 --title Report").exit_code == 0);
  // Rejected records leave exit code 2.
  auto rejected = add("--id oops --kind report --pid not-a-pid --title Oops");
  CHECK(rejected.exit_code == 2);
  CHECK(rejected.err.find("error:") != std::string::npos);

  // Meshing an undefined milestone needs --artifacts and --tag.
  CHECK(run_cli("link mesh" + ledger + " --milestone rel").exit_code == 2);
  auto mesh = run_cli("link mesh" + ledger +
                      " --milestone rel --artifacts code,data,rep --tag 2026-sim-demo "
                      "--format json");
  REQUIRE_MESSAGE(mesh.exit_code == 0, mesh.err);
  CHECK(parse_json(mesh.out)["new_pairs"].size() == 3);  // C(3,2)
  auto again = run_cli("link mesh" + ledger + " --milestone rel --format json");
  CHECK(again.exit_code == 0);
  CHECK(parse_json(again.out)["new_pairs"].empty());  // idempotent

  auto check = run_cli("link check" + ledger + " --milestone rel --format json");
  CHECK(check.exit_code == 0);
  CHECK(parse_json(check.out)["findings"].empty());

  auto render = run_cli("link render code --stdout" + ledger);
  REQUIRE(render.exit_code == 0);
  auto record = parse_json(render.out);
  CHECK(record["identifier"] == "10.5072/zenodo.11");
  CHECK(record["relatedIdentifiers"].size() == 2);
  CHECK(render.out.find("dc.relation.isreferencedby") != std::string::npos);

  auto readme = run_cli("link readme" + ledger + " --milestone rel");
  CHECK(readme.exit_code == 0);
  CHECK(readme.out.find("- code-snapshot: Code") != std::string::npos);
  CHECK(readme.out.find("https://doi.org/10.5072/zenodo.13") != std::string::npos);

  auto bumped = run_cli("link new-version" + ledger + " --id rep --pid 10.5072/zenodo.14");
  CHECK(bumped.exit_code == 0);
  CHECK(bumped.out.find("registered 'rep-v2' as the new version of 'rep'") != std::string::npos);
}

TEST_CASE("cli: milestone tags compose and validate") {
  auto ok = run_cli("link tag 2022-jcp-ccs-r1");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out == "2022-jcp-ccs-r1: valid\n");

  auto bad_year = run_cli("link tag 22-jcp-ccs");
  CHECK(bad_year.exit_code == 1);
  CHECK(bad_year.out == "22-jcp-ccs: invalid\n");

  auto uppercase = run_cli("link tag 2022-JCP-ccs");
  CHECK(uppercase.exit_code == 1);

  auto composed = run_cli("link tag --year 2026 --venue sim --topic demo --revision 2");
  CHECK(composed.exit_code == 0);
  CHECK(composed.out == "2026-sim-demo-r2\n");

  CHECK(run_cli("link tag").exit_code == 2);  // nothing to do
}
