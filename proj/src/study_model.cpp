#include "studyforge/study_model.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>
#include <string_view>

#include "studyforge/csv.hpp"
#include "studyforge/error.hpp"
#include "studyforge/runner.hpp"

#include "scalar_json.hpp"

namespace studyforge {

namespace {

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& message) {
  throw ParseError(message, node.Mark().line + 1, node.Mark().column + 1);
}

Scalar scalar_from_node(const YAML::Node& node) {
  if (!node.IsScalar()) {
    fail_at(node, "expected a scalar value");
  }
  // A quoted scalar carries the non-specific tag "!": keep it text even when
  // it looks numeric ("10,10,10,10" stays text either way, "3000" does not).
  if (node.Tag() == "!") {
    return Scalar::text(node.Scalar());
  }
  return Scalar::from_text(node.Scalar());
}

std::string string_from_node(const YAML::Node& node, const char* what) {
  if (!node.IsScalar()) {
    fail_at(node, std::string("expected a string for ") + what);
  }
  return node.Scalar();
}

std::map<std::string, Scalar> vector_from_node(const YAML::Node& node) {
  if (!node.IsMap()) {
    fail_at(node, "expected a name: value map for an extra case");
  }
  std::map<std::string, Scalar> vec;
  for (const auto& kv : node) {
    std::string name = kv.first.Scalar();
    if (!vec.emplace(name, scalar_from_node(kv.second)).second) {
      fail_at(kv.first, "duplicate parameter '" + name + "' in extra case");
    }
  }
  return vec;
}

}  // namespace

bool is_valid_parameter_name(std::string_view name) {
  if (name.empty()) {
    return false;
  }
  auto word = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  if (!word(name[0])) {
    return false;
  }
  for (char c : name.substr(1)) {
    if (!word(c) && !(c >= '0' && c <= '9')) {
      return false;
    }
  }
  return name.substr(0, std::string_view(kParamColumnPrefix).size()) != kParamColumnPrefix;
}

bool is_valid_study_name(std::string_view name) {
  if (name.empty()) {
    return false;
  }
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

void validate_definition(const StudyDefinition& def) {
  if (!is_valid_study_name(def.study_name)) {
    throw Error("study name '" + def.study_name + "' must match [a-z0-9_-]+");
  }
  std::set<std::string> names;
  for (const auto& entry : def.space.entries) {
    if (!is_valid_parameter_name(entry.name)) {
      throw Error("parameter name '" + entry.name +
                  "' must be an identifier outside the reserved PARAM_ prefix");
    }
    if (!names.insert(entry.name).second) {
      throw Error("duplicate parameter '" + entry.name + "'");
    }
    if (entry.values.empty()) {
      throw Error("parameter '" + entry.name + "' has an empty value list");
    }
    std::set<std::string> rendered;
    for (const auto& v : entry.values) {
      if (!rendered.insert(v.render()).second) {
        throw Error("parameter '" + entry.name + "' repeats value '" + v.render() + "'");
      }
    }
  }
  for (const auto& placeholder : template_placeholders(def.command_template)) {
    if (placeholder != "CASE_ID" && names.find(placeholder) == names.end()) {
      throw Error("command template references unknown placeholder '{" + placeholder + "}'");
    }
  }
  if (def.secondary_file.empty() || def.secondary_file.front() == '/') {
    throw Error("secondary_file must be a non-empty relative path");
  }
  for (const auto& extra : def.extra_cases) {
    if (extra.size() != names.size()) {
      throw Error("extra case must assign exactly the declared parameters");
    }
    for (const auto& [name, value] : extra) {
      (void)value;
      if (names.find(name) == names.end()) {
        throw Error("extra case assigns unknown parameter '" + name + "'");
      }
    }
  }
}

StudyDefinition parse_study_definition(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) {
    throw ParseError("definition file must be a key-value map", 1, 1);
  }

  StudyDefinition def;
  def.secondary_file = "secondary.csv";
  bool saw_study = false;
  bool saw_parameters = false;
  bool saw_command = false;

  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    const YAML::Node& value = kv.second;
    if (key == "study") {
      def.study_name = string_from_node(value, "study");
      saw_study = true;
    } else if (key == "command") {
      def.command_template = string_from_node(value, "command");
      saw_command = true;
    } else if (key == "secondary_file") {
      def.secondary_file = string_from_node(value, "secondary_file");
    } else if (key == "parameters") {
      saw_parameters = true;
      if (!value.IsMap() && !(value.IsNull() || !value.IsDefined())) {
        fail_at(value, "parameters must be a map of name: [values]");
      }
      if (value.IsMap()) {
        for (const auto& pkv : value) {
          ParameterEntry entry;
          entry.name = pkv.first.Scalar();
          if (!pkv.second.IsSequence()) {
            fail_at(pkv.second.IsDefined() ? pkv.second : pkv.first,
                    "values of parameter '" + entry.name + "' must be a list");
          }
          for (const auto& item : pkv.second) {
            entry.values.push_back(scalar_from_node(item));
          }
          def.space.entries.push_back(std::move(entry));
        }
      }
    } else if (key == "primary_globs") {
      if (!value.IsSequence()) {
        fail_at(value, "primary_globs must be a list of glob patterns");
      }
      for (const auto& item : value) {
        def.primary_globs.push_back(string_from_node(item, "primary_globs entry"));
      }
    } else if (key == "cases") {
      if (!value.IsSequence()) {
        fail_at(value, "cases must be a list of parameter maps");
      }
      for (const auto& item : value) {
        def.extra_cases.push_back(vector_from_node(item));
      }
    } else {
      fail_at(kv.first, "unknown key '" + key + "'");
    }
  }

  if (!saw_study) {
    throw ParseError("missing required key 'study'", 1, 1);
  }
  if (!saw_parameters) {
    throw ParseError("missing required key 'parameters'", 1, 1);
  }
  if (!saw_command) {
    throw ParseError("missing required key 'command'", 1, 1);
  }

  try {
    validate_definition(def);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return def;
}

StudyPlan expand(const StudyDefinition& def) {
  validate_definition(def);

  StudyPlan plan;
  plan.study_name = def.study_name;
  for (const auto& entry : def.space.entries) {
    plan.parameter_names.push_back(entry.name);
  }

  std::size_t total = 1;
  for (const auto& entry : def.space.entries) {
    total *= entry.values.size();
  }

  // Row-major: walk indexes like a mixed-radix odometer whose last digit
  // (the last-declared parameter) increments first.
  std::vector<std::size_t> index(def.space.entries.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    CaseRecord c;
    c.case_id = static_cast<std::int64_t>(plan.cases.size());
    for (std::size_t p = 0; p < def.space.entries.size(); ++p) {
      c.vector[def.space.entries[p].name] = def.space.entries[p].values[index[p]];
    }
    plan.cases.push_back(std::move(c));
    for (std::size_t p = index.size(); p-- > 0;) {
      if (++index[p] < def.space.entries[p].values.size()) {
        break;
      }
      index[p] = 0;
    }
  }

  for (const auto& extra : def.extra_cases) {
    CaseRecord c;
    c.case_id = static_cast<std::int64_t>(plan.cases.size());
    c.vector = extra;
    plan.cases.push_back(std::move(c));
  }

  std::set<std::vector<std::string>> seen;
  for (const auto& c : plan.cases) {
    std::vector<std::string> key;
    key.reserve(plan.parameter_names.size());
    for (const auto& name : plan.parameter_names) {
      key.push_back(c.vector.at(name).render());
    }
    if (!seen.insert(std::move(key)).second) {
      throw Error("case " + std::to_string(c.case_id) +
                  " duplicates another case's parameter vector");
    }
  }
  return plan;
}

std::string write_case_map(const StudyPlan& plan) {
  std::vector<std::string> header;
  header.reserve(plan.parameter_names.size() + 1);
  header.emplace_back("CASE_ID");
  header.insert(header.end(), plan.parameter_names.begin(), plan.parameter_names.end());

  std::string out = csv::write_row(header);
  for (const auto& c : plan.cases) {
    std::vector<std::string> row;
    row.reserve(header.size());
    row.push_back(std::to_string(c.case_id));
    for (const auto& name : plan.parameter_names) {
      row.push_back(c.vector.at(name).render());
    }
    out += csv::write_row(row);
  }
  return out;
}

StudyPlan read_case_map(const std::string& text) {
  auto records = csv::parse(text);
  if (records.empty()) {
    throw ParseError("case map is empty");
  }
  const auto& header = records[0].cells;
  if (header.empty() || header[0] != "CASE_ID") {
    throw ParseError("case map header must begin with CASE_ID", records[0].line);
  }

  StudyPlan plan;
  for (std::size_t i = 1; i < header.size(); ++i) {
    plan.parameter_names.push_back(header[i]);
  }

  std::set<std::int64_t> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.cells.size() != header.size()) {
      throw ParseError("row has " + std::to_string(rec.cells.size()) + " cells, header has " +
                           std::to_string(header.size()),
                       rec.line);
    }
    CaseRecord c;
    if (!parse_int64(rec.cells[0], c.case_id) || c.case_id < 0) {
      throw ParseError("CASE_ID '" + rec.cells[0] + "' is not a non-negative integer", rec.line);
    }
    if (!ids.insert(c.case_id).second) {
      throw ParseError("duplicate CASE_ID " + std::to_string(c.case_id), rec.line);
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
      c.vector[header[i]] = Scalar::from_text(rec.cells[i]);
    }
    plan.cases.push_back(std::move(c));
  }

  for (std::size_t i = 0; i < plan.cases.size(); ++i) {
    if (plan.cases[i].case_id != static_cast<std::int64_t>(i)) {
      throw ParseError("case ids must be contiguous 0..n-1; row " + std::to_string(i) +
                       " carries id " + std::to_string(plan.cases[i].case_id));
    }
  }
  return plan;
}

std::string definition_to_json(const StudyDefinition& def) {
  nlohmann::ordered_json j;
  j["study"] = def.study_name;
  j["command"] = def.command_template;
  j["secondary_file"] = def.secondary_file;
  // Parameters as an array of {name, values} pairs: declaration order is
  // load-bearing and arrays keep it unambiguous.
  j["parameters"] = nlohmann::ordered_json::array();
  for (const auto& entry : def.space.entries) {
    nlohmann::ordered_json e;
    e["name"] = entry.name;
    e["values"] = nlohmann::ordered_json::array();
    for (const auto& v : entry.values) {
      e["values"].push_back(scalar_to_json(v));
    }
    j["parameters"].push_back(std::move(e));
  }
  j["primary_globs"] = def.primary_globs;
  j["cases"] = nlohmann::ordered_json::array();
  for (const auto& extra : def.extra_cases) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    for (const auto& [name, value] : extra) {
      e[name] = scalar_to_json(value);
    }
    j["cases"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

StudyDefinition definition_from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("study.json is not valid JSON: ") + e.what());
  }
  StudyDefinition def;
  try {
    def.study_name = j.at("study").get<std::string>();
    def.command_template = j.at("command").get<std::string>();
    def.secondary_file = j.value("secondary_file", std::string("secondary.csv"));
    for (const auto& e : j.value("parameters", nlohmann::ordered_json::array())) {
      ParameterEntry entry;
      entry.name = e.at("name").get<std::string>();
      for (const auto& v : e.at("values")) {
        entry.values.push_back(scalar_from_json(v));
      }
      def.space.entries.push_back(std::move(entry));
    }
    def.primary_globs = j.value("primary_globs", std::vector<std::string>{});
    for (const auto& e : j.value("cases", nlohmann::ordered_json::array())) {
      std::map<std::string, Scalar> extra;
      for (const auto& [name, value] : e.items()) {
        extra[name] = scalar_from_json(value);
      }
      def.extra_cases.push_back(std::move(extra));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("study.json field error: ") + e.what());
  }
  validate_definition(def);
  return def;
}

}  // namespace studyforge
