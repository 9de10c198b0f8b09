#include <doctest.h>

#include <set>
#include <string>

#include "studyforge/error.hpp"
#include "studyforge/study_model.hpp"
#include "test_util.hpp"

using namespace studyforge;

namespace {

const char* kPaperSpace = R"(study: nn_tuning
parameters:
  HIDDEN_LAYERS: ["10,10,10,10"]
  OPTIMIZER_STEP: [0.0001, 0.001]
  MAX_ITERATIONS: [3000]
command: train --layers {HIDDEN_LAYERS} --step {OPTIMIZER_STEP} --iters {MAX_ITERATIONS}
)";

}  // namespace

TEST_CASE("study_model: minimal definition") {
  const auto def = parse_study_definition("study: s\nparameters:\n  n: [1]\ncommand: echo {n}\n");
  REQUIRE(def.space.entries.size() == 1);
  CHECK(def.space.entries[0].name == "n");
  REQUIRE(def.space.entries[0].values.size() == 1);
  CHECK(def.space.entries[0].values[0].as_integer() == 1);
  CHECK(def.secondary_file == "secondary.csv");  // default
}

TEST_CASE("study_model: paper-shaped space") {
  const auto def = parse_study_definition(kPaperSpace);
  REQUIRE(def.space.entries.size() == 3);
  CHECK(def.space.entries[0].name == "HIDDEN_LAYERS");
  // The quoted list-like value stays opaque text.
  CHECK(def.space.entries[0].values[0].is_text());
  CHECK(def.space.entries[0].values[0].as_text() == "10,10,10,10");
  CHECK(def.space.entries[1].values.size() == 2);
  CHECK(def.space.entries[1].values[0].render() == "0.0001");
  CHECK(def.space.entries[1].values[1].render() == "0.001");
  CHECK(def.space.entries[2].values[0].as_integer() == 3000);

  // Paper space: one HIDDEN_LAYERS value x two OPTIMIZER_STEP values x one
  // MAX_ITERATIONS value -> exactly two cases.
  const auto plan = expand(def);
  CHECK(plan.cases.size() == 2);
}

TEST_CASE("study_model: definition errors") {
  // Reserved prefix.
  CHECK_THROWS_WITH_AS(
      parse_study_definition("study: s\nparameters:\n  PARAM_x: [1]\ncommand: echo {PARAM_x}\n"),
      doctest::Contains("PARAM_"), ParseError);
  // Empty value list.
  CHECK_THROWS_AS(parse_study_definition("study: s\nparameters:\n  n: []\ncommand: true\n"),
                  ParseError);
  // Unknown placeholder in the command template.
  CHECK_THROWS_WITH_AS(
      parse_study_definition("study: s\nparameters:\n  n: [1]\ncommand: echo {missing}\n"),
      doctest::Contains("missing"), ParseError);
  // Unknown top-level key.
  CHECK_THROWS_AS(parse_study_definition("study: s\nparameters:\n  n: [1]\ncommand: t\nbogus: 1\n"),
                  ParseError);
  // Syntax errors carry a line position.
  try {
    parse_study_definition("study: s\nparameters:\n  n: [1\ncommand: t\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("study_model: expansion order is row-major, last parameter fastest") {
  const auto def =
      parse_study_definition("study: s\nparameters:\n  a: [1, 2]\n  b: [x, y]\ncommand: true\n");
  const auto plan = expand(def);
  REQUIRE(plan.cases.size() == 4);
  auto vec = [&](std::size_t i, const char* name) {
    return plan.cases[i].vector.at(name).render();
  };
  CHECK(plan.cases[0].case_id == 0);
  CHECK(vec(0, "a") == "1");
  CHECK(vec(0, "b") == "x");
  CHECK(vec(1, "a") == "1");
  CHECK(vec(1, "b") == "y");
  CHECK(vec(2, "a") == "2");
  CHECK(vec(2, "b") == "x");
  CHECK(vec(3, "a") == "2");
  CHECK(vec(3, "b") == "y");
}

TEST_CASE("study_model: single-value space expands to one case") {
  const auto def = parse_study_definition("study: s\nparameters:\n  a: [7]\ncommand: true\n");
  const auto plan = expand(def);
  REQUIRE(plan.cases.size() == 1);
  CHECK(plan.cases[0].case_id == 0);
  CHECK(plan.cases[0].vector.at("a").as_integer() == 7);
}

TEST_CASE("study_model: explicit extra cases are appended after expansion") {
  const auto def = parse_study_definition(
      "study: s\nparameters:\n  a: [1, 2]\ncommand: true\ncases:\n  - a: 99\n");
  const auto plan = expand(def);
  REQUIRE(plan.cases.size() == 3);
  CHECK(plan.cases[2].case_id == 2);
  CHECK(plan.cases[2].vector.at("a").as_integer() == 99);
}

TEST_CASE("study_model: expansion properties over random spaces") {
  // Acceptance criterion 2's property set, smaller budget here.
  testutil::RNG rng(42);
  for (int iter = 0; iter < 60; ++iter) {
    StudyDefinition def;
    def.study_name = "s";
    def.space = testutil::rand_space(rng);
    def.command_template = "true";
    def.secondary_file = "secondary.csv";

    const auto plan = expand(def);
    // Counting oracle: product of value-list lengths, computed independently.
    CHECK(plan.cases.size() == testutil::space_cardinality(def.space));
    // Determinism: structural equality across repeated expansion.
    CHECK(expand(def) == plan);
    // Distinctness: no two cases share a rendered vector.
    std::set<std::string> seen;
    for (const auto& c : plan.cases) {
      std::string key;
      for (const auto& [name, value] : c.vector) {
        key += name + "=" + value.render() + ";";
      }
      CHECK(seen.insert(key).second);
    }
    // Ids are contiguous from zero.
    for (std::size_t i = 0; i < plan.cases.size(); ++i) {
      CHECK(plan.cases[i].case_id == static_cast<std::int64_t>(i));
    }
  }
}

TEST_CASE("study_model: case map write/read inverse pair") {
  const auto def =
      parse_study_definition("study: s\nparameters:\n  a: [1, 2]\n  b: [x, y]\ncommand: true\n");
  const auto plan = expand(def);
  const std::string text = write_case_map(plan);
  // Header + one row per case.
  CHECK(text.rfind("CASE_ID,a,b\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);

  auto back = read_case_map(text);
  back.study_name = plan.study_name;  // the CSV does not carry the name
  CHECK(back.parameter_names == plan.parameter_names);
  REQUIRE(back.cases.size() == plan.cases.size());
  for (std::size_t i = 0; i < plan.cases.size(); ++i) {
    CHECK(back.cases[i].case_id == plan.cases[i].case_id);
    for (const auto& [name, value] : plan.cases[i].vector) {
      CHECK(back.cases[i].vector.at(name).render() == value.render());
    }
  }
  // Byte stability: write(read(write(p))) == write(p).
  CHECK(write_case_map(back) == text);
}

TEST_CASE("study_model: case map round-trip property") {
  testutil::RNG rng(43);
  for (int iter = 0; iter < 40; ++iter) {
    StudyDefinition def;
    def.study_name = "s";
    def.space = testutil::rand_space(rng);
    def.command_template = "true";
    const auto plan = expand(def);
    const auto text = write_case_map(plan);
    CHECK(write_case_map(read_case_map(text)) == text);
  }
}

TEST_CASE("study_model: case map errors") {
  CHECK_THROWS_WITH_AS(read_case_map("CASE_ID,a\n0,1\n2,2\n"), doctest::Contains("contiguous"),
                       ParseError);
  CHECK_THROWS_WITH_AS(read_case_map("CASE_ID,a\n0,1\n0,2\n"), doctest::Contains("0"),
                       ParseError);
  CHECK_THROWS_AS(read_case_map("a,b\n1,2\n"), ParseError);       // missing CASE_ID
  CHECK_THROWS_AS(read_case_map("CASE_ID,a\n0\n"), ParseError);   // ragged
}

TEST_CASE("study_model: definition JSON round trip") {
  const auto def = parse_study_definition(kPaperSpace);
  const auto back = definition_from_json(definition_to_json(def));
  CHECK(back == def);
  CHECK_THROWS_AS(definition_from_json("{"), ParseError);
  CHECK_THROWS_AS(definition_from_json("{}"), Error);
}
