#pragma once

// Deterministic stand-in for the verification backend.
//
// Every run gets a cost; lower is better. The cost starts from a program
// difficulty term and adds a penalty for every flag that does not suit
// the program's structure:
//
//   difficulty   0.3 + 0.1 * min(loops + ifs + elses, 10)
//   strategy     k-induction wanted when an infinite loop exists or loop
//                nesting reaches 3: incremental costs +1.2 there,
//                k-induction costs +0.6 elsewhere
//   unwind       unlimited wanted with an infinite loop or >= 4 loops:
//                unwind=10 costs +1.0 there, unlimited costs +0.5 elsewhere
//   k-step       under k-induction +0.35 per step away from
//                clamp(max loop depth, 1, 3); under incremental
//                +0.1 * (k - 1)
//   solver       z3 wanted with >= 6 ifs+elses, boolector otherwise: +0.4
//   encoding     fixedbv wanted with < 3 ifs+elses, floatbv otherwise: +0.2
//   context      bound 4 costs +0.15
//   fuzzing      with nondet calls: off costs +1.5; on costs +0.4 per level
//                away from the wanted level (long if a nondet call sits in
//                a loop, medium with >= 3 calls, short otherwise). Without
//                nondet calls each fuzz level costs +0.3.
//   noise        uniform in [-0.25, 0.25), a hash of (seed, features, flag
//                index)
//
// cost = max(0, sum). cover-error: cost >= 3 times out with an unknown
// verdict; otherwise the bug is found after limit * cost / 3 seconds.
// cover-branches: coverage = clamp(1 - cost / 3.6, 0, 1) reached after
// limit * min(1, 0.5 + cost / 6) seconds.
//
// A program with all-zero features is trivial: every configuration finds
// the bug (or full coverage) after 5% of the limit, i.e. class 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "flagsel/campaign/runner.hpp"
#include "flagsel/detail/random.hpp"
#include "flagsel/features.hpp"
#include "flagsel/flagspace.hpp"
#include "flagsel/labeling.hpp"

namespace flagsel {

inline constexpr double kMockNoiseAmplitude = 0.25;
inline constexpr double kMockTimeoutCost = 3.0;
inline constexpr double kMockCoverageCostScale = 3.6;
inline constexpr double kMockTrivialElapsedFraction = 0.05;

/// Planted cost of running `config` on a program with features `f`,
/// without noise.
inline double mock_penalty_cost(const FeatureVector& f, const FlagConfiguration& config) {
  const std::uint32_t loops = f.for_count + f.while_count + f.do_count;
  const std::uint32_t branches = f.if_count + f.else_count;
  const std::uint32_t deepest = std::max({f.for_max_depth, f.while_max_depth, f.do_max_depth});
  const std::uint32_t infinite = f.while_infinite_count + f.do_infinite_count;

  double cost = 0.3 + 0.1 * std::min<std::uint32_t>(loops + branches, 10);

  const bool wants_kinduction = infinite > 0 || deepest >= 3;
  if (wants_kinduction && config.strategy == Strategy::Incremental) cost += 1.2;
  if (!wants_kinduction && config.strategy == Strategy::KInduction) cost += 0.6;

  const bool wants_unlimited = infinite > 0 || loops >= 4;
  if (wants_unlimited && config.unwind == Unwind::Bounded10) cost += 1.0;
  if (!wants_unlimited && config.unwind == Unwind::Unlimited) cost += 0.5;

  const int k = static_cast<int>(config.k_step());
  if (config.strategy == Strategy::KInduction) {
    const int wanted_k = static_cast<int>(std::clamp<std::uint32_t>(deepest, 1, 3));
    cost += 0.35 * std::abs(k - wanted_k);
  } else {
    cost += 0.1 * (k - 1);
  }

  const bool wants_z3 = branches >= 6;
  if (wants_z3 != (config.solver == Solver::Z3)) cost += 0.4;

  const bool wants_fixedbv = branches < 3;
  if (wants_fixedbv != (config.encoding == Encoding::FixedBV)) cost += 0.2;

  if (config.context_bound() == 4) cost += 0.15;

  const int level = static_cast<int>(config.fuzz);
  if (f.nondet_call_count > 0) {
    if (config.fuzz == FuzzLevel::Off) {
      cost += 1.5;
    } else {
      const int wanted = f.has_nondet_in_loop ? 3 : (f.nondet_call_count >= 3 ? 2 : 1);
      cost += 0.4 * std::abs(level - wanted);
    }
  } else {
    cost += 0.3 * level;
  }
  return cost;
}

inline double mock_noise(const FeatureVector& f, const FlagConfiguration& config, std::uint64_t seed) {
  std::uint64_t h = detail::splitmix64(seed);
  for (double v : f.to_array()) h = detail::hash_double(h, v);
  h = detail::hash_combine(h, canonical_index(config));
  return kMockNoiseAmplitude * (2.0 * detail::unit_interval(h) - 1.0);
}

inline bool is_trivial_program(const FeatureVector& f) { return f == FeatureVector{}; }

/// Outcome of the planted rule above. Pure in all of its arguments.
inline RunOutcome mock_backend(const FeatureVector& f, const FlagConfiguration& config, TaskType task,
                               double time_limit, std::uint64_t seed) {
  if (is_trivial_program(f)) {
    const double elapsed = kMockTrivialElapsedFraction * time_limit;
    return task == TaskType::CoverError
               ? RunOutcome::cover_error(Verdict::BugDetected, elapsed, time_limit)
               : RunOutcome::cover_branches(1.0, elapsed, time_limit);
  }

  const double cost = std::max(0.0, mock_penalty_cost(f, config) + mock_noise(f, config, seed));
  if (task == TaskType::CoverError) {
    if (cost >= kMockTimeoutCost) return RunOutcome::cover_error(Verdict::Unknown, time_limit, time_limit);
    return RunOutcome::cover_error(Verdict::BugDetected, time_limit * (cost / kMockTimeoutCost),
                                   time_limit);
  }
  const double coverage = std::clamp(1.0 - cost / kMockCoverageCostScale, 0.0, 1.0);
  const double elapsed = time_limit * std::min(1.0, 0.5 + cost / 6.0);
  return RunOutcome::cover_branches(coverage, elapsed, time_limit);
}

class MockBackend final : public BackendRunner {
 public:
  explicit MockBackend(std::uint64_t seed = 0) : seed_(seed) {}

  RunResult run(const RunRequest& r) const override {
    return {mock_backend(r.features, r.config, r.benchmark.task, r.benchmark.time_limit_seconds, seed_), {}};
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace flagsel
