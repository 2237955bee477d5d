#include <cmath>

#include <gtest/gtest.h>

#include "flagsel/campaign/mock_backend.hpp"
#include "support/synth.hpp"

using namespace flagsel;

namespace {

// The planted rule re-derived from its written description.
double documented_cost(const FeatureVector& f, const FlagConfiguration& c) {
  const double loops = f.for_count + f.while_count + f.do_count;
  const double branches = f.if_count + f.else_count;
  const double deepest = std::max({f.for_max_depth, f.while_max_depth, f.do_max_depth});
  const bool infinite = f.while_infinite_count + f.do_infinite_count > 0;
  const bool kind = c.strategy == Strategy::KInduction;

  double cost = 0.3 + 0.1 * std::min(loops + branches, 10.0);
  const bool want_kind = infinite || deepest >= 3;
  cost += want_kind ? (kind ? 0 : 1.2) : (kind ? 0.6 : 0);
  const bool want_unlimited = infinite || loops >= 4;
  const bool unlimited = c.unwind == Unwind::Unlimited;
  cost += want_unlimited ? (unlimited ? 0 : 1.0) : (unlimited ? 0.5 : 0);
  const double k = c.k_step();
  cost += kind ? 0.35 * std::fabs(k - std::clamp(deepest, 1.0, 3.0)) : 0.1 * (k - 1);
  cost += ((branches >= 6) == (c.solver == Solver::Z3)) ? 0 : 0.4;
  cost += ((branches < 3) == (c.encoding == Encoding::FixedBV)) ? 0 : 0.2;
  cost += c.context_bound() == 4 ? 0.15 : 0;
  const double level = static_cast<double>(c.fuzz);
  if (f.nondet_call_count > 0) {
    const double wanted = f.has_nondet_in_loop ? 3 : (f.nondet_call_count >= 3 ? 2 : 1);
    cost += level == 0 ? 1.5 : 0.4 * std::fabs(level - wanted);
  } else {
    cost += 0.3 * level;
  }
  return cost;
}

int documented_class(const FeatureVector& f, const FlagConfiguration& c, TaskType task, std::uint64_t seed) {
  const double cost = std::max(0.0, documented_cost(f, c) + mock_noise(f, c, seed));
  if (task == TaskType::CoverError) {
    if (cost >= 3) return 5;
    const double ratio = 1 - cost / 3;
    return ratio >= 0.8 ? 0 : ratio >= 0.6 ? 1 : ratio >= 0.4 ? 2 : ratio >= 0.2 ? 3 : 4;
  }
  const double cov = std::clamp(1 - cost / 3.6, 0.0, 1.0);
  return cov >= 0.85 ? 0 : cov >= 0.68 ? 1 : cov >= 0.51 ? 2 : cov >= 0.34 ? 3 : cov >= 0.17 ? 4 : 5;
}

}  // namespace

TEST(MockBackend, Deterministic) {
  const auto f = extract_features(synth::program(5));
  for (const auto& c : enumerate_flags()) {
    EXPECT_EQ(mock_backend(f, c, TaskType::CoverError, 300, 7), mock_backend(f, c, TaskType::CoverError, 300, 7));
    EXPECT_EQ(mock_backend(f, c, TaskType::CoverBranches, 300, 7),
              mock_backend(f, c, TaskType::CoverBranches, 300, 7));
  }
}

TEST(MockBackend, SeedChangesNoiseOnly) {
  const auto f = extract_features(synth::program(5));
  int differing = 0;
  for (const auto& c : enumerate_flags()) {
    const double a = mock_noise(f, c, 1), b = mock_noise(f, c, 2);
    EXPECT_LT(std::fabs(a), 0.25 + 1e-12);
    differing += a != b;
  }
  EXPECT_GT(differing, 300);
}

TEST(MockBackend, TrivialProgramBaseCase) {
  const FeatureVector zero;
  for (const auto& c : enumerate_flags()) {
    const auto e = mock_backend(zero, c, TaskType::CoverError, 300, 3);
    EXPECT_EQ(e.verdict, Verdict::BugDetected);
    EXPECT_DOUBLE_EQ(e.elapsed_seconds, 15.0);
    EXPECT_EQ(classify(e), 0);
    const auto b = mock_backend(zero, c, TaskType::CoverBranches, 300, 3);
    EXPECT_EQ(*b.coverage_score, 1.0);
    EXPECT_EQ(classify(b), 0);
  }
}

TEST(MockBackend, CostMatchesWrittenRule) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto f = extract_features(synth::program(seed));
    for (const auto& c : enumerate_flags()) ASSERT_NEAR(mock_penalty_cost(f, c), documented_cost(f, c), 1e-12);
  }
}

TEST(MockBackend, OutcomesAreValid) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto f = extract_features(synth::program(seed));
    for (const auto& c : enumerate_flags())
      for (auto task : {TaskType::CoverError, TaskType::CoverBranches})
        EXPECT_NO_THROW(mock_backend(f, c, task, 300, seed).validate());
  }
}

TEST(MockBackend, ArgminMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto f = extract_features(synth::program(seed));
    for (auto task : {TaskType::CoverError, TaskType::CoverBranches}) {
      int best_mock = 6, best_oracle = 6;
      std::vector<std::size_t> argmin_mock, argmin_oracle;
      for (const auto& c : enumerate_flags()) {
        const int m = classify(mock_backend(f, c, task, 300, seed));
        const int o = documented_class(f, c, task, seed);
        EXPECT_EQ(m, o) << to_canonical_text(c);
        if (m < best_mock) best_mock = m, argmin_mock.clear();
        if (m == best_mock) argmin_mock.push_back(canonical_index(c));
        if (o < best_oracle) best_oracle = o, argmin_oracle.clear();
        if (o == best_oracle) argmin_oracle.push_back(canonical_index(c));
      }
      EXPECT_EQ(best_mock, best_oracle);
      EXPECT_EQ(argmin_mock, argmin_oracle);
    }
  }
}

TEST(MockBackend, PlantedPreferences) {
  // Infinite loop with nondet input in the loop: k-induction, unlimited
  // unwinding and long fuzzing should be cheapest.
  const auto f = extract_features("void g(void) { while (1) { x = __VERIFIER_nondet_int(); } }");
  const FlagConfiguration* best = nullptr;
  const auto all = enumerate_flags();
  for (const auto& c : all)
    if (!best || mock_penalty_cost(f, c) < mock_penalty_cost(f, *best)) best = &c;
  EXPECT_EQ(best->strategy, Strategy::KInduction);
  EXPECT_EQ(best->unwind, Unwind::Unlimited);
  EXPECT_EQ(best->fuzz, FuzzLevel::Long);
  EXPECT_EQ(best->k_step(), 1u);
  EXPECT_EQ(best->context_bound(), 2u);
}

TEST(MockBackend, RunnerInterface) {
  const MockBackend backend(11);
  const BenchmarkEntry bench{"b", "unused.c", TaskType::CoverBranches, 120};
  const auto f = extract_features(synth::program(3));
  const auto c = configuration_at(77);
  const std::vector<std::string> args;
  const auto r = backend.run(RunRequest{bench, f, c, args});
  EXPECT_EQ(r.outcome, mock_backend(f, c, TaskType::CoverBranches, 120, 11));
  EXPECT_TRUE(r.note.empty());
}
