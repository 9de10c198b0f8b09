#include "studyforge/recipe_lint.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace studyforge {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) {
    out.push_back(std::move(cur));
  }
  return out;
}

std::string strip(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_hex_token(std::string_view s) {
  if (s.size() < 7 || s.size() > 40) {
    return false;
  }
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

/// Host of a URL-ish token, or empty when the token is no URL.
std::string url_host(std::string_view token) {
  std::string_view rest;
  if (token.substr(0, 8) == "https://") {
    rest = token.substr(8);
  } else if (token.substr(0, 7) == "http://") {
    rest = token.substr(7);
  } else if (token.substr(0, 6) == "git://") {
    rest = token.substr(6);
  } else if (token.substr(0, 6) == "ftp://") {
    rest = token.substr(6);
  } else {
    return {};
  }
  std::size_t end = rest.find_first_of("/:?#");
  std::string host = lower(rest.substr(0, end));
  if (std::size_t at = host.rfind('@'); at != std::string::npos) {
    host = host.substr(at + 1);  // drop user-info
  }
  return host;
}

bool host_allowlisted(const std::string& host, const std::vector<std::string>& allowlist) {
  for (const auto& allowed : allowlist) {
    const std::string a = lower(allowed);
    if (host == a) {
      return true;
    }
    if (host.size() > a.size() && host.compare(host.size() - a.size(), a.size(), a) == 0 &&
        host[host.size() - a.size() - 1] == '.') {
      return true;  // subdomain of an allowlisted host
    }
  }
  return false;
}

}  // namespace

RecipeKeyword parse_recipe_keyword(std::string_view word) {
  const std::string w = upper(word);
  if (w == "FROM") return RecipeKeyword::from;
  if (w == "RUN") return RecipeKeyword::run;
  if (w == "COPY") return RecipeKeyword::copy;
  if (w == "ADD") return RecipeKeyword::add;
  if (w == "ARG") return RecipeKeyword::arg;
  if (w == "ENV") return RecipeKeyword::env;
  if (w == "LABEL") return RecipeKeyword::label;
  if (w == "WORKDIR") return RecipeKeyword::workdir;
  if (w == "ENTRYPOINT") return RecipeKeyword::entrypoint;
  if (w == "CMD") return RecipeKeyword::cmd;
  return RecipeKeyword::other;
}

Recipe parse_recipe(const std::string& text) {
  Recipe recipe;

  // Split into physical lines first, accepting every line-ending style.
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) {
    lines.push_back(std::move(cur));
  }

  auto rstrip = [](const std::string& s) {
    std::size_t e = s.find_last_not_of(" \t");
    return e == std::string::npos ? std::string{} : s.substr(0, e + 1);
  };

  std::size_t i = 0;
  while (i < lines.size()) {
    const int start_line = static_cast<int>(i) + 1;
    std::string logical = lines[i];
    ++i;
    const std::string first = strip(logical);
    if (first.empty() || first[0] == '#') {
      continue;
    }
    // Fold trailing-backslash continuations: the backslash and line break
    // vanish, the rest concatenates verbatim ("a \" + " b" -> "a  b").
    // Full-line comments inside a continuation block are dropped.
    while (true) {
      std::string r = rstrip(logical);
      if (r.empty() || r.back() != '\\') {
        break;
      }
      r.pop_back();
      while (i < lines.size()) {
        const std::string next = strip(lines[i]);
        if (!next.empty() && next[0] == '#') {
          ++i;
        } else {
          break;
        }
      }
      if (i >= lines.size()) {
        logical = r;
        break;
      }
      logical = r + lines[i];
      ++i;
    }

    std::string instruction_text = strip(logical);
    if (instruction_text.empty()) {
      continue;
    }
    std::size_t kw_end = instruction_text.find_first_of(" \t");
    RecipeInstruction inst;
    inst.line = start_line;
    if (kw_end == std::string::npos) {
      inst.raw_keyword = instruction_text;
      inst.args.clear();
    } else {
      inst.raw_keyword = instruction_text.substr(0, kw_end);
      inst.args = strip(instruction_text.substr(kw_end + 1));
    }
    inst.keyword = parse_recipe_keyword(inst.raw_keyword);
    recipe.instructions.push_back(std::move(inst));
  }
  return recipe;
}

std::string rule_id(LintRule r) {
  switch (r) {
    case LintRule::unpinned_base:
      return "R1-unpinned-base";
    case LintRule::host_copy:
      return "R2-host-copy";
    case LintRule::mutable_fetch:
      return "R3-mutable-fetch";
    case LintRule::unpinned_package:
      return "R4-unpinned-package";
  }
  return "R?-unknown";
}

namespace {

Severity severity_for(LintRule rule, Severity fallback, const LintConfig& config) {
  auto it = config.severity_overrides.find(rule);
  return it == config.severity_overrides.end() ? fallback : it->second;
}

/// R1: FROM must carry a digest or a version tag other than `latest`.
/// `scratch` and references to earlier build stages are exempt.
void lint_from(const Recipe& recipe, const LintConfig& config,
               std::vector<LintFinding>& findings) {
  std::vector<std::string> stage_names;
  for (const auto& inst : recipe.instructions) {
    if (inst.keyword != RecipeKeyword::from) {
      continue;
    }
    auto tokens = split_ws(inst.args);
    // FROM [--platform=...] <image> [AS <name>]
    std::size_t img = 0;
    while (img < tokens.size() && tokens[img].rfind("--", 0) == 0) {
      ++img;
    }
    if (img >= tokens.size()) {
      findings.push_back({LintRule::unpinned_base,
                          severity_for(LintRule::unpinned_base, Severity::error, config),
                          inst.line, "FROM names no image"});
      continue;
    }
    const std::string& image = tokens[img];
    const std::string image_lc = lower(image);
    const bool names_earlier_stage =
        std::find(stage_names.begin(), stage_names.end(), image_lc) != stage_names.end();
    if (tokens.size() >= img + 3 && upper(tokens[img + 1]) == "AS") {
      stage_names.push_back(lower(tokens[img + 2]));
    }
    if (image_lc == "scratch" || names_earlier_stage) {
      continue;
    }
    if (image.find('@') != std::string::npos) {
      continue;  // digest-pinned
    }
    // A tag is the part after the last ':' that is not a registry port
    // (ports only appear before the first '/').
    std::size_t colon = image.rfind(':');
    std::size_t slash = image.find('/');
    bool has_tag = colon != std::string::npos &&
                   (slash == std::string::npos || colon > slash);
    std::string tag = has_tag ? image.substr(colon + 1) : std::string{};
    if (!has_tag || tag.empty() || lower(tag) == "latest") {
      findings.push_back({LintRule::unpinned_base,
                          severity_for(LintRule::unpinned_base, Severity::error, config),
                          inst.line,
                          "base image '" + image + "' is not version-pinned (tag or digest)"});
    }
  }
}

/// R2: COPY/ADD with a local-path source copies files from the build host.
void lint_copy(const Recipe& recipe, const LintConfig& config,
               std::vector<LintFinding>& findings) {
  for (const auto& inst : recipe.instructions) {
    if (inst.keyword != RecipeKeyword::copy && inst.keyword != RecipeKeyword::add) {
      continue;
    }
    auto tokens = split_ws(inst.args);
    std::vector<std::string> operands;
    bool from_stage = false;
    for (const auto& t : tokens) {
      if (t.rfind("--", 0) == 0) {
        if (t.rfind("--from=", 0) == 0) {
          from_stage = true;  // copying from another stage, not the host
        }
        continue;
      }
      operands.push_back(t);
    }
    if (from_stage || operands.size() < 2) {
      continue;
    }
    // Everything but the final operand is a source.
    bool host_source = false;
    for (std::size_t s = 0; s + 1 < operands.size(); ++s) {
      if (url_host(operands[s]).empty()) {
        host_source = true;
      }
    }
    if (host_source) {
      findings.push_back({LintRule::host_copy,
                          severity_for(LintRule::host_copy, Severity::error, config), inst.line,
                          upper(inst.raw_keyword) +
                              " copies from the build host; builds stop working on any other "
                              "machine"});
    }
  }
}

/// One shell segment of a RUN line (split on &&, ||, ';', '|').
std::vector<std::string> shell_segments(const std::string& args) {
  std::vector<std::string> segments;
  std::string cur;
  for (std::size_t i = 0; i < args.size(); ++i) {
    char c = args[i];
    if ((c == '&' && i + 1 < args.size() && args[i + 1] == '&') ||
        (c == '|' && i + 1 < args.size() && args[i + 1] == '|')) {
      segments.push_back(cur);
      cur.clear();
      ++i;
    } else if (c == ';' || c == '|') {
      segments.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  segments.push_back(cur);
  return segments;
}

/// R3: clones must check out a full/abbreviated commit hash; downloads must
/// either verify a checksum in the same RUN or come from an allowlisted
/// persistent host.
void lint_fetch(const Recipe& recipe, const LintConfig& config,
                std::vector<LintFinding>& findings) {
  for (const auto& inst : recipe.instructions) {
    if (inst.keyword != RecipeKeyword::run) {
      continue;
    }
    auto segments = shell_segments(inst.args);

    // A pinned checkout anywhere in the RUN covers its clones.
    bool has_pin = false;
    bool has_checksum_check = false;
    for (const auto& seg : segments) {
      auto tokens = split_ws(seg);
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::string tok = lower(tokens[t]);
        if (tok == "checkout" || tok == "reset" || tok == "--revision" || tok == "--rev") {
          for (std::size_t u = t + 1; u < tokens.size(); ++u) {
            if (is_hex_token(tokens[u])) {
              has_pin = true;
            }
          }
        }
        if (tok.find("sha256sum") != std::string::npos ||
            tok.find("sha512sum") != std::string::npos ||
            tok.find("md5sum") != std::string::npos ||
            tok.find("shasum") != std::string::npos) {
          has_checksum_check = true;
        }
      }
    }

    for (const auto& seg : segments) {
      auto tokens = split_ws(seg);

      // The fetch tool must be the segment's command word — `apt install curl`
      // merely names curl as a package. Skip wrappers and env assignments.
      std::size_t cmd = 0;
      while (cmd < tokens.size()) {
        const std::string low = lower(tokens[cmd]);
        if (low == "sudo" || low == "env" || low == "command" || low == "exec" ||
            (low.find('=') != std::string::npos && low.find('/') == std::string::npos)) {
          ++cmd;
          continue;
        }
        break;
      }
      if (cmd >= tokens.size()) {
        continue;
      }
      std::string head = lower(tokens[cmd]);
      if (const auto slash = head.rfind('/'); slash != std::string::npos) {
        head = head.substr(slash + 1);  // /usr/bin/curl
      }
      const bool is_clone =
          head == "hg" || head == "svn" ||
          (head == "git" && cmd + 1 < tokens.size() && lower(tokens[cmd + 1]) == "clone");
      const bool is_download = head == "wget" || head == "curl";

      std::string target_url;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (std::string host = url_host(tokens[t]); !host.empty() && target_url.empty()) {
          target_url = tokens[t];
        }
      }
      if (!is_clone && !is_download) {
        continue;
      }
      const std::string host = url_host(target_url);
      const bool allowlisted =
          !host.empty() && host_allowlisted(host, config.persistent_host_allowlist);

      if (is_clone && !has_pin) {
        const Severity sev = allowlisted
                                 ? severity_for(LintRule::mutable_fetch, Severity::warning, config)
                                 : severity_for(LintRule::mutable_fetch, Severity::error, config);
        findings.push_back({LintRule::mutable_fetch, sev, inst.line,
                            "repository clone without a pinned commit checkout; the tip moves "
                            "and old builds become irreproducible"});
      } else if (is_download && !allowlisted) {
        // Non-archival hosts can vanish; a checksum in the same RUN protects
        // integrity (warning), but only an archival host protects
        // availability (no finding).
        const Severity sev = has_checksum_check
                                 ? severity_for(LintRule::mutable_fetch, Severity::warning, config)
                                 : severity_for(LintRule::mutable_fetch, Severity::error, config);
        findings.push_back({LintRule::mutable_fetch, sev, inst.line,
                            "download from '" + (host.empty() ? std::string("<unknown>") : host) +
                                "' — not an archival host" +
                                (has_checksum_check ? "" : " and no checksum verification")});
      }
    }
  }
}

/// R4: package-manager installs must pin versions.
void lint_packages(const Recipe& recipe, const LintConfig& config,
                   std::vector<LintFinding>& findings) {
  for (const auto& inst : recipe.instructions) {
    if (inst.keyword != RecipeKeyword::run) {
      continue;
    }
    for (const auto& seg : shell_segments(inst.args)) {
      auto tokens = split_ws(seg);
      // Find "<manager> ... install" (apt-get/apt/apk: install/add;
      // pip/pip3: install).
      std::string manager;
      std::size_t verb = tokens.size();
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::string tok = lower(tokens[t]);
        if (tok == "apt-get" || tok == "apt" || tok == "apk" || tok == "pip" || tok == "pip3") {
          for (std::size_t u = t + 1; u < tokens.size(); ++u) {
            const std::string verb_tok = lower(tokens[u]);
            if (verb_tok == "install" || (tok == "apk" && verb_tok == "add")) {
              manager = tok;
              verb = u;
              break;
            }
          }
          if (!manager.empty()) {
            break;
          }
        }
      }
      if (manager.empty()) {
        continue;
      }

      const bool pip = manager == "pip" || manager == "pip3";
      std::vector<std::string> unpinned;
      bool skip_next = false;
      for (std::size_t t = verb + 1; t < tokens.size(); ++t) {
        const std::string& tok = tokens[t];
        if (skip_next) {
          skip_next = false;
          continue;
        }
        if (tok.rfind("-", 0) == 0) {
          // Option; "-r file" and "--requirement file" consume the next token.
          if (tok == "-r" || tok == "--requirement" || tok == "-c" || tok == "--constraint") {
            skip_next = true;
          }
          continue;
        }
        if (!url_host(tok).empty() || tok.rfind("./", 0) == 0 || tok.rfind("/", 0) == 0) {
          continue;  // URL or path install: R3's business, not a name pin
        }
        const bool pinned = pip ? tok.find("==") != std::string::npos
                                : tok.find('=') != std::string::npos;
        if (!pinned) {
          unpinned.push_back(tok);
        }
      }
      if (!unpinned.empty()) {
        std::string names;
        for (std::size_t u = 0; u < unpinned.size(); ++u) {
          names += (u > 0 ? ", " : "") + unpinned[u];
        }
        findings.push_back({LintRule::unpinned_package,
                            severity_for(LintRule::unpinned_package, Severity::warning, config),
                            inst.line,
                            manager + " installs unpinned packages: " + names});
      }
    }
  }
}

}  // namespace

std::vector<LintFinding> lint(const Recipe& recipe, const LintConfig& config) {
  std::vector<LintFinding> findings;
  lint_from(recipe, config, findings);
  lint_copy(recipe, config, findings);
  lint_fetch(recipe, config, findings);
  lint_packages(recipe, config, findings);
  std::stable_sort(findings.begin(), findings.end(),
                   [](const LintFinding& a, const LintFinding& b) { return a.line < b.line; });
  return findings;
}

std::vector<LintFinding> lint_text(const std::string& text, const LintConfig& config) {
  return lint(parse_recipe(text), config);
}

}  // namespace studyforge
