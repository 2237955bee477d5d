#include <chrono>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "flagsel/campaign/campaign.hpp"
#include "flagsel/campaign/process_runner.hpp"
#include "support/scratch.hpp"

using namespace flagsel;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = support::scratch_dir() / "flagsel_process_test";
  fs::create_directories(dir);
  return dir;
}

fs::path script(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << "#!/bin/sh\n" << body;
  fs::permissions(p, fs::perms::owner_all);
  return p;
}

fs::path program() {
  const fs::path p = scratch() / "prog.c";
  std::ofstream(p) << "int main(void) { while (1) { } }\n";
  return p;
}

RunResult run_with(const fs::path& backend, TaskType task, double limit, const FlagConfiguration& c = {}) {
  const BenchmarkEntry bench{"prog", program(), task, limit};
  const FeatureVector f = extract_features(read_text_file(bench.path));
  const auto args = to_backend_args(c);
  return ProcessBackend({backend.string()}).run(RunRequest{bench, f, c, args});
}

}  // namespace

TEST(BackendOutput, Parsing) {
  auto r = parse_backend_output("log line\nverdict=bug-detected elapsed=12.5\n");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->verdict, Verdict::BugDetected);
  EXPECT_EQ(r->elapsed, 12.5);
  r = parse_backend_output("coverage=0.75 elapsed=3\ntrailing noise\n");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->coverage, 0.75);
  EXPECT_FALSE(parse_backend_output("nothing here"));
  EXPECT_FALSE(parse_backend_output("coverage=1.5"));
  EXPECT_FALSE(parse_backend_output("verdict=maybe"));
  EXPECT_FALSE(parse_backend_output("verdict=unknown elapsed=abc"));
}

TEST(BackendOutput, SplitCommand) {
  EXPECT_EQ(split_command("python3 'my tool.py'  --x \"a b\""),
            (std::vector<std::string>{"python3", "my tool.py", "--x", "a b"}));
  EXPECT_THROW(split_command("a 'b"), Error);
}

TEST(ProcessBackend, PassesArgumentsAndProgramPath) {
  const auto echo = script("echo.sh", "echo \"$@\"\necho verdict=bug-detected elapsed=30\n");
  const BenchmarkEntry bench{"prog", program(), TaskType::CoverError, 300};
  const auto c = configuration_at(383);
  const auto args = to_backend_args(c);
  std::vector<std::string> argv{echo.string()};
  argv.insert(argv.end(), args.begin(), args.end());
  argv.push_back(bench.path.string());
  detail::TempDirectory dir;
  const auto proc = run_process(argv, dir.path(), 10);
  EXPECT_EQ(proc.exit_status, 0);
  EXPECT_NE(proc.stdout_text.find("--strategy kinduction --solver z3"), std::string::npos) << proc.stdout_text;
  EXPECT_NE(proc.stdout_text.find("--fuzz on --fuzz-time 188 " + bench.path.string()), std::string::npos);

  const auto r = run_with(echo, TaskType::CoverError, 300, c);
  EXPECT_EQ(r.outcome, RunOutcome::cover_error(Verdict::BugDetected, 30, 300));
  EXPECT_EQ(classify(r.outcome), 0);
}

TEST(ProcessBackend, CoverageResult) {
  const auto b = script("cov.sh", "echo coverage=0.6 elapsed=100\n");
  const auto r = run_with(b, TaskType::CoverBranches, 300);
  EXPECT_EQ(r.outcome.coverage_score, 0.6);
  EXPECT_EQ(classify(r.outcome), 2);
}

TEST(ProcessBackend, ElapsedFallsBackToWallClock) {
  const auto b = script("nowall.sh", "echo verdict=unknown\n");
  const auto r = run_with(b, TaskType::CoverError, 300);
  EXPECT_EQ(r.outcome.verdict, Verdict::Unknown);
  EXPECT_LT(r.outcome.elapsed_seconds, 5);
}

TEST(ProcessBackend, TimeoutKillsAndChargesFullLimit) {
  const auto b = script("slow.sh", "sleep 30\necho verdict=bug-detected elapsed=1\n");
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_with(b, TaskType::CoverError, 1);
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(took, 5);
  EXPECT_EQ(r.outcome.elapsed_seconds, 1);
  EXPECT_EQ(classify(r.outcome), 5);
  EXPECT_EQ(r.note, "timed out");
}

TEST(ProcessBackend, ClosedStdoutStillHonoursDeadline) {
  const auto b = script("detach.sh", "exec >/dev/null\nsleep 30\n");
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_with(b, TaskType::CoverBranches, 1);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5);
  EXPECT_EQ(classify(r.outcome), 5);
}

TEST(ProcessBackend, ResultLineAtDeadlineCountsAsBugAtLimit) {
  const auto b = script("late.sh", "echo verdict=bug-detected elapsed=0.5\nsleep 30\n");
  const auto r = run_with(b, TaskType::CoverError, 1);
  EXPECT_EQ(r.outcome.verdict, Verdict::BugDetected);
  EXPECT_EQ(r.outcome.elapsed_seconds, 1);
  EXPECT_EQ(classify(r.outcome), 4);
}

TEST(ProcessBackend, MalformedOutputDegrades) {
  const auto garbage = script("garbage.sh", "echo hello\nexit 3\n");
  auto r = run_with(garbage, TaskType::CoverError, 10);
  EXPECT_EQ(classify(r.outcome), 5);
  EXPECT_NE(r.note.find("no result line"), std::string::npos) << r.note;

  const auto wrong = script("wrong.sh", "echo coverage=0.9\n");
  r = run_with(wrong, TaskType::CoverError, 10);
  EXPECT_EQ(classify(r.outcome), 5);
  EXPECT_NE(r.note.find("verdict"), std::string::npos);

  r = run_with(scratch() / "does-not-exist.sh", TaskType::CoverBranches, 10);
  EXPECT_EQ(classify(r.outcome), 5);
  EXPECT_EQ(r.note, "backend could not be executed");
}

TEST(ProcessBackend, CampaignWithScriptBackend) {
  const auto b = script("kind.sh",
                        "case \"$*\" in *kinduction*) echo verdict=bug-detected elapsed=10 ;; "
                        "*) echo verdict=unknown ;; esac\n");
  const std::vector<BenchmarkEntry> manifest{{"prog", program(), TaskType::CoverError, 300}};
  std::vector<FlagConfiguration> flags{configuration_at(0), configuration_at(200), configuration_at(383)};
  CampaignOptions opt;
  opt.jobs = 3;
  const Dataset d = run_campaign(manifest, ProcessBackend({b.string()}), flags, opt);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].label, 5);
  EXPECT_EQ(d[1].label, 0);
  EXPECT_EQ(d[2].label, 0);
}
