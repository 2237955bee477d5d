#pragma once

#include <string>
#include <vector>

#include "flagsel/campaign/benchmark.hpp"
#include "flagsel/features.hpp"
#include "flagsel/flagspace.hpp"
#include "flagsel/labeling.hpp"

namespace flagsel {

struct RunRequest {
  const BenchmarkEntry& benchmark;
  const FeatureVector& features;
  const FlagConfiguration& config;
  const std::vector<std::string>& backend_args;
};

struct RunResult {
  RunOutcome outcome;
  std::string note;  // empty unless the run failed or was degraded
};

/// One backend execution of (program, flags). Implementations must be
/// safe to call concurrently from several campaign workers.
class BackendRunner {
 public:
  virtual ~BackendRunner() = default;
  virtual RunResult run(const RunRequest& request) const = 0;
};

/// Outcome recorded when a run produced nothing usable: unknown verdict or
/// zero coverage at the full time limit, i.e. class 5.
inline RunOutcome failed_outcome(TaskType task, double time_limit) {
  return task == TaskType::CoverError ? RunOutcome::cover_error(Verdict::Unknown, time_limit, time_limit)
                                      : RunOutcome::cover_branches(0.0, time_limit, time_limit);
}

}  // namespace flagsel
