#pragma once

// Runs an external backend executable. Contract with the backend:
//
//   <command...> <backend args...> <absolute program path>
//
// executed inside a fresh temporary working directory. The backend prints
// a result line such as
//
//   verdict=bug-detected elapsed=12.5
//   coverage=0.73 elapsed=280
//
// to standard output; the last line carrying `verdict=` or `coverage=`
// wins. `elapsed=` is optional (wall-clock time is used otherwise). The
// process group is killed at the time limit and the run is recorded as
// elapsed = limit.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "flagsel/campaign/runner.hpp"
#include "flagsel/error.hpp"

namespace flagsel {

/// Splits a command on whitespace. Single or double quotes group words;
/// no other shell syntax is interpreted.
inline std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> out;
  std::string word;
  bool in_word = false;
  char quote = 0;
  for (char c : command) {
    if (quote) {
      if (c == quote) quote = 0;
      else word += c;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) out.push_back(std::move(word));
      word.clear();
      in_word = false;
    } else {
      word += c;
      in_word = true;
    }
  }
  if (quote) throw Error(ErrorCode::InvalidArgument, "unbalanced quote in backend command");
  if (in_word) out.push_back(std::move(word));
  return out;
}

struct BackendReport {
  std::optional<Verdict> verdict;
  std::optional<double> coverage;
  std::optional<double> elapsed;
};

/// Parses backend stdout; returns nullopt when no result line is present
/// or the last one is malformed.
inline std::optional<BackendReport> parse_backend_output(std::string_view text) {
  std::optional<std::string_view> result_line;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (line.find("verdict=") != std::string_view::npos ||
        line.find("coverage=") != std::string_view::npos)
      result_line = line;
    start = end + 1;
  }
  if (!result_line) return std::nullopt;

  auto parse_number = [](std::string_view s) -> std::optional<double> {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  };

  BackendReport report;
  std::istringstream words{std::string(*result_line)};
  std::string word;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) continue;
    const std::string_view key = std::string_view(word).substr(0, eq);
    const std::string_view value = std::string_view(word).substr(eq + 1);
    if (key == "verdict") {
      if (value == "bug-detected") report.verdict = Verdict::BugDetected;
      else if (value == "unknown") report.verdict = Verdict::Unknown;
      else return std::nullopt;
    } else if (key == "coverage") {
      report.coverage = parse_number(value);
      if (!report.coverage || *report.coverage < 0 || *report.coverage > 1) return std::nullopt;
    } else if (key == "elapsed") {
      report.elapsed = parse_number(value);
      if (!report.elapsed || *report.elapsed < 0) return std::nullopt;
    }
  }
  return report;
}

struct ProcessResult {
  std::string stdout_text;
  int exit_status = -1;  // -1 when killed or not exited normally
  bool timed_out = false;
  double wall_seconds = 0;
};

namespace detail {

class TempDirectory {
 public:
  TempDirectory() {
    std::string pattern = (std::filesystem::temp_directory_path() / "flagsel-run-XXXXXX").string();
    if (!::mkdtemp(pattern.data()))
      throw Error(ErrorCode::BackendError, "cannot create temporary directory");
    path_ = pattern;
  }
  ~TempDirectory() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDirectory(const TempDirectory&) = delete;
  TempDirectory& operator=(const TempDirectory&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace detail

/// Runs `argv` in `workdir`, collecting stdout, killing the whole process
/// group once `time_limit_seconds` of wall-clock time have passed.
inline ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& workdir,
                                 double time_limit_seconds) {
  if (argv.empty()) throw Error(ErrorCode::InvalidArgument, "empty backend command");

  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);
  const std::string dir = workdir.string();

  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorCode::BackendError, "pipe failed");

  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(ErrorCode::BackendError, "fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(dir.c_str()) != 0) ::_exit(126);
    ::dup2(fds[1], STDOUT_FILENO);
    const int devnull = ::open("/dev/null", O_RDWR);
    if (devnull >= 0) {
      ::dup2(devnull, STDIN_FILENO);
      ::dup2(devnull, STDERR_FILENO);
    }
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(fds[1]);

  ProcessResult result;
  const auto deadline = started + std::chrono::duration<double>(time_limit_seconds);
  char buf[4096];
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd p{fds[0], POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(remaining + 1, 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) continue;
    const ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    result.stdout_text.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fds[0]);

  // The pipe can close before the child exits; the deadline still applies.
  int status = 0;
  while (!result.timed_out) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid || (done < 0 && errno != EINTR)) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      break;
    }
    ::usleep(2000);
  }
  if (result.timed_out) {
    ::kill(-pid, SIGKILL);
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (WIFEXITED(status)) result.exit_status = WEXITSTATUS(status);
  return result;
}

class ProcessBackend final : public BackendRunner {
 public:
  explicit ProcessBackend(std::vector<std::string> command) : command_(std::move(command)) {
    if (command_.empty()) throw Error(ErrorCode::InvalidArgument, "empty backend command");
  }

  /// `spec` is the part after `exec:` on the command line.
  static ProcessBackend from_spec(std::string_view spec) { return ProcessBackend(split_command(spec)); }

  RunResult run(const RunRequest& r) const override {
    const double limit = r.benchmark.time_limit_seconds;
    std::vector<std::string> argv = command_;
    argv.insert(argv.end(), r.backend_args.begin(), r.backend_args.end());
    argv.push_back(std::filesystem::absolute(r.benchmark.path).string());

    detail::TempDirectory workdir;
    const ProcessResult proc = run_process(argv, workdir.path(), limit);
    return interpret(proc, r.benchmark.task, limit);
  }

  /// Turns raw process output into an outcome. Missing or malformed result
  /// lines degrade to class 5 with a note.
  static RunResult interpret(const ProcessResult& proc, TaskType task, double limit) {
    const auto report = parse_backend_output(proc.stdout_text);
    std::string note;
    if (proc.timed_out) note = "timed out";
    if (!report) {
      if (note.empty())
        note = proc.exit_status == 127 ? "backend could not be executed"
                                       : "no result line in backend output (exit " +
                                             std::to_string(proc.exit_status) + ")";
      return {failed_outcome(task, limit), note};
    }

    double elapsed = proc.timed_out ? limit : report->elapsed.value_or(proc.wall_seconds);
    elapsed = std::min(elapsed, limit);
    if (task == TaskType::CoverError) {
      if (!report->verdict) return {failed_outcome(task, limit), "result line lacks verdict="};
      return {RunOutcome::cover_error(*report->verdict, elapsed, limit), note};
    }
    if (!report->coverage) return {failed_outcome(task, limit), "result line lacks coverage="};
    return {RunOutcome::cover_branches(*report->coverage, elapsed, limit), note};
  }

  const std::vector<std::string>& command() const { return command_; }

 private:
  std::vector<std::string> command_;
};

}  // namespace flagsel
