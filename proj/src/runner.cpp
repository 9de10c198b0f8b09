#include "studyforge/runner.hpp"

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "studyforge/csv.hpp"
#include "studyforge/error.hpp"

#include "scalar_json.hpp"

extern char** environ;

namespace studyforge {

std::string to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::pending:
      return "pending";
    case CaseStatus::running:
      return "running";
    case CaseStatus::succeeded:
      return "succeeded";
    case CaseStatus::failed:
      return "failed";
    case CaseStatus::stopped:
      return "stopped";
  }
  return "pending";
}

CaseStatus parse_case_status(std::string_view text) {
  for (int s = 0; s <= static_cast<int>(CaseStatus::stopped); ++s) {
    if (to_string(static_cast<CaseStatus>(s)) == text) {
      return static_cast<CaseStatus>(s);
    }
  }
  throw Error("unknown case status '" + std::string(text) + "'");
}

std::size_t RunReport::count(CaseStatus s) const {
  std::size_t n = 0;
  for (const auto& c : cases) {
    if (c.status == s) {
      ++n;
    }
  }
  return n;
}

bool RunReport::all_succeeded() const {
  return count(CaseStatus::succeeded) == cases.size();
}

std::vector<std::string> template_placeholders(const std::string& command_template) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  const std::string& t = command_template;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '{') {
      if (i + 1 < t.size() && t[i + 1] == '{') {
        ++i;
        continue;
      }
      std::size_t close = t.find('}', i + 1);
      if (close == std::string::npos) {
        throw Error("unbalanced '{' in command template");
      }
      std::string name = t.substr(i + 1, close - i - 1);
      if (name.empty() || name.find('{') != std::string::npos) {
        throw Error("malformed placeholder in command template");
      }
      if (seen.insert(name).second) {
        names.push_back(std::move(name));
      }
      i = close;
    } else if (t[i] == '}') {
      if (i + 1 < t.size() && t[i + 1] == '}') {
        ++i;
        continue;
      }
      throw Error("unbalanced '}' in command template");
    }
  }
  return names;
}

std::string render_command(const std::string& command_template, const CaseRecord& c) {
  std::string out;
  const std::string& t = command_template;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '{') {
      if (i + 1 < t.size() && t[i + 1] == '{') {
        out += '{';
        ++i;
        continue;
      }
      std::size_t close = t.find('}', i + 1);
      if (close == std::string::npos) {
        throw Error("unbalanced '{' in command template");
      }
      const std::string name = t.substr(i + 1, close - i - 1);
      if (name == "CASE_ID") {
        out += std::to_string(c.case_id);
      } else {
        auto it = c.vector.find(name);
        if (it == c.vector.end()) {
          throw Error("unknown placeholder '{" + name + "}'");
        }
        out += it->second.render();
      }
      i = close;
    } else if (t[i] == '}') {
      if (i + 1 < t.size() && t[i + 1] == '}') {
        out += '}';
        ++i;
        continue;
      }
      throw Error("unbalanced '}' in command template");
    } else {
      out += t[i];
    }
  }
  return out;
}

namespace {

std::filesystem::path case_dir_path(const std::filesystem::path& study_dir, std::int64_t id) {
  return study_dir / std::to_string(id);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    out << contents;
    out.flush();
    if (!out) {
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_status_file(const std::filesystem::path& case_dir, CaseStatus status) {
  write_file_atomic(case_dir / "status", to_string(status) + "\n");
}

CaseStatus read_status_file(const std::filesystem::path& case_dir, std::string* problem = nullptr) {
  std::ifstream in(case_dir / "status");
  if (!in) {
    if (problem != nullptr) {
      *problem = "status file missing; reported as pending";
    }
    return CaseStatus::pending;
  }
  std::string word;
  in >> word;
  try {
    return parse_case_status(word);
  } catch (const Error&) {
    if (problem != nullptr) {
      *problem = "status file holds '" + word + "'; reported as pending";
    }
    return CaseStatus::pending;
  }
}

std::string params_json(const StudyPlan& plan, const CaseRecord& c) {
  nlohmann::ordered_json j;
  j["CASE_ID"] = c.case_id;
  for (const auto& name : plan.parameter_names) {
    j[name] = scalar_to_json(c.vector.at(name));
  }
  return j.dump(2) + "\n";
}

constexpr const char* kStopMarker = "STOP";

}  // namespace

std::filesystem::path materialize(const StudyPlan& plan, const StudyDefinition& def,
                                  const std::filesystem::path& root, bool force) {
  if (plan.study_name != def.study_name) {
    throw Error("plan and definition belong to different studies");
  }
  const auto study_dir = root / plan.study_name;
  if (std::filesystem::exists(study_dir)) {
    if (!force) {
      throw Error("study directory '" + study_dir.string() +
                  "' already exists (use force to replace it)");
    }
    std::filesystem::remove_all(study_dir);
  }
  std::filesystem::create_directories(study_dir);

  write_file_atomic(study_dir / "case_map.csv", write_case_map(plan));
  write_file_atomic(study_dir / "study.json", definition_to_json(def));

  for (const auto& c : plan.cases) {
    const auto dir = case_dir_path(study_dir, c.case_id);
    std::filesystem::create_directory(dir);
    write_file_atomic(dir / "params.json", params_json(plan, c));
    write_status_file(dir, CaseStatus::pending);
  }
  return study_dir;
}

void request_stop(const std::filesystem::path& study_dir) {
  if (!std::filesystem::is_directory(study_dir)) {
    throw Error("no study directory at '" + study_dir.string() + "'");
  }
  write_file_atomic(study_dir / kStopMarker, "stop requested\n");
}

bool stop_requested(const std::filesystem::path& study_dir) {
  return std::filesystem::exists(study_dir / kStopMarker);
}

void clear_stop(const std::filesystem::path& study_dir) {
  std::filesystem::remove(study_dir / kStopMarker);
}

namespace {

struct ActiveChild {
  std::int64_t case_id;
  std::chrono::steady_clock::time_point started;
};

[[noreturn]] void exec_case(const std::filesystem::path& case_dir, const std::string& command,
                            const std::vector<std::string>& env_passthrough) {
  // Child side: never throw, never return.
  if (chdir(case_dir.string().c_str()) != 0) {
    _exit(127);
  }
  int out_fd = ::open("stdout.log", O_CREAT | O_TRUNC | O_WRONLY, 0644);
  int err_fd = ::open("stderr.log", O_CREAT | O_TRUNC | O_WRONLY, 0644);
  if (out_fd < 0 || err_fd < 0 || dup2(out_fd, STDOUT_FILENO) < 0 ||
      dup2(err_fd, STDERR_FILENO) < 0) {
    _exit(127);
  }
  ::close(out_fd);
  ::close(err_fd);

  if (env_passthrough.empty()) {
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  std::vector<std::string> kept;
  kept.reserve(env_passthrough.size() + 1);
  auto keep = [&kept](const char* name) {
    const char* value = std::getenv(name);
    if (value != nullptr) {
      kept.push_back(std::string(name) + "=" + value);
    }
  };
  keep("PATH");  // a shell without PATH helps nobody
  for (const auto& name : env_passthrough) {
    if (name != "PATH") {
      keep(name.c_str());
    }
  }
  std::vector<char*> envp;
  envp.reserve(kept.size() + 1);
  for (auto& kv : kept) {
    envp.push_back(kv.data());
  }
  envp.push_back(nullptr);

  const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
  execve("/bin/sh", const_cast<char**>(argv), envp.data());
  _exit(127);
}

}  // namespace

RunReport run(const StudyPlan& plan, const StudyDefinition& def, const ExecutorConfig& cfg) {
  if (cfg.max_parallel < 1) {
    throw Error("max_parallel must be at least 1");
  }
  const auto study_dir = cfg.root / plan.study_name;
  if (!std::filesystem::is_directory(study_dir)) {
    throw Error("study '" + plan.study_name + "' is not materialized under '" +
                cfg.root.string() + "'");
  }

  RunReport report;
  report.study_name = plan.study_name;
  report.cases.resize(plan.cases.size());

  std::vector<std::size_t> queue;  // indexes into plan.cases
  for (std::size_t i = 0; i < plan.cases.size(); ++i) {
    const auto& c = plan.cases[i];
    CaseResult& result = report.cases[i];
    result.case_id = c.case_id;
    result.status = read_status_file(case_dir_path(study_dir, c.case_id));
    if (result.status == CaseStatus::pending) {
      queue.push_back(i);
    } else if (result.status != CaseStatus::running) {
      result.note = "already " + to_string(result.status) + "; skipped";
    }
  }

  std::size_t next = 0;
  std::map<pid_t, ActiveChild> active;
  bool stopped = false;

  auto drain_queue_as_stopped = [&]() {
    for (std::size_t q = next; q < queue.size(); ++q) {
      CaseResult& result = report.cases[queue[q]];
      write_status_file(case_dir_path(study_dir, result.case_id), CaseStatus::stopped);
      result.status = CaseStatus::stopped;
      result.note = "stop requested before launch";
      report.transitions.push_back({result.case_id, CaseStatus::pending, CaseStatus::stopped});
    }
    next = queue.size();
  };

  while (next < queue.size() || !active.empty()) {
    // Launch phase: check the stop marker before every launch.
    while (next < queue.size() && active.size() < static_cast<std::size_t>(cfg.max_parallel)) {
      if (!stopped && stop_requested(study_dir)) {
        stopped = true;
      }
      if (stopped) {
        drain_queue_as_stopped();
        break;
      }
      const std::size_t index = queue[next];
      ++next;
      const CaseRecord& c = plan.cases[index];
      const auto case_dir = case_dir_path(study_dir, c.case_id);

      std::string command = render_command(def.command_template, c);
      if (cfg.submit_wrapper && !cfg.submit_wrapper->empty()) {
        command = *cfg.submit_wrapper + " " + command;
      }

      pid_t pid = fork();
      if (pid < 0) {
        throw Error("fork failed: " + std::string(std::strerror(errno)));
      }
      if (pid == 0) {
        exec_case(case_dir, command, cfg.env_passthrough);
      }
      write_status_file(case_dir, CaseStatus::running);
      report.cases[index].status = CaseStatus::running;
      report.transitions.push_back({c.case_id, CaseStatus::pending, CaseStatus::running});
      active.emplace(pid, ActiveChild{c.case_id, std::chrono::steady_clock::now()});
    }

    if (active.empty()) {
      if (!stopped && stop_requested(study_dir)) {
        stopped = true;
        drain_queue_as_stopped();
      }
      if (next >= queue.size()) {
        break;
      }
      continue;
    }

    int wait_status = 0;
    pid_t pid = waitpid(-1, &wait_status, 0);
    if (pid < 0) {
      if (errno == EINTR) {
        continue;
      }
      throw Error("waitpid failed: " + std::string(std::strerror(errno)));
    }
    auto it = active.find(pid);
    if (it == active.end()) {
      continue;  // not ours (should not happen in practice)
    }
    const std::int64_t case_id = it->second.case_id;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - it->second.started)
            .count();
    active.erase(it);

    CaseResult* result = nullptr;
    for (auto& r : report.cases) {
      if (r.case_id == case_id) {
        result = &r;
        break;
      }
    }
    result->wall_seconds = wall;
    if (WIFEXITED(wait_status)) {
      result->exit_code = WEXITSTATUS(wait_status);
      result->status = *result->exit_code == 0 ? CaseStatus::succeeded : CaseStatus::failed;
    } else if (WIFSIGNALED(wait_status)) {
      result->status = CaseStatus::failed;
      result->note = "terminated by signal " + std::to_string(WTERMSIG(wait_status));
    } else {
      result->status = CaseStatus::failed;
      result->note = "child ended in an unexpected way";
    }
    write_status_file(case_dir_path(study_dir, case_id), result->status);
    report.transitions.push_back({case_id, CaseStatus::running, result->status});
  }

  return report;
}

RunReport status(const std::filesystem::path& study_dir) {
  std::ifstream in(study_dir / "case_map.csv", std::ios::binary);
  if (!in) {
    throw Error("no case_map.csv under '" + study_dir.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const StudyPlan plan = read_case_map(buf.str());

  RunReport report;
  report.study_name = study_dir.filename().string();
  for (const auto& c : plan.cases) {
    CaseResult result;
    result.case_id = c.case_id;
    result.status = read_status_file(case_dir_path(study_dir, c.case_id), &result.note);
    report.cases.push_back(std::move(result));
  }
  return report;
}

}  // namespace studyforge
