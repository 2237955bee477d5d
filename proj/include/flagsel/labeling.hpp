#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "flagsel/error.hpp"

namespace flagsel {

enum class TaskType : std::uint8_t { CoverError, CoverBranches };

inline std::string_view to_string(TaskType t) {
  return t == TaskType::CoverError ? "cover-error" : "cover-branches";
}

inline TaskType parse_task_type(std::string_view s) {
  if (s == "cover-error") return TaskType::CoverError;
  if (s == "cover-branches") return TaskType::CoverBranches;
  throw Error(ErrorCode::InvalidArgument,
              "unknown task type '" + std::string(s) + "' (expected cover-error or cover-branches)");
}

enum class Verdict : std::uint8_t { BugDetected, Unknown };

inline std::string_view to_string(Verdict v) {
  return v == Verdict::BugDetected ? "bug-detected" : "unknown";
}

inline Verdict parse_verdict(std::string_view s) {
  if (s == "bug-detected") return Verdict::BugDetected;
  if (s == "unknown") return Verdict::Unknown;
  throw Error(ErrorCode::InvalidArgument, "unknown verdict '" + std::string(s) + "'");
}

/// Result of one backend execution. cover-error runs carry a verdict,
/// cover-branches runs carry a coverage score.
struct RunOutcome {
  TaskType task = TaskType::CoverError;
  Verdict verdict = Verdict::Unknown;
  std::optional<double> coverage_score;
  double elapsed_seconds = 0;
  double time_limit_seconds = 300;

  static RunOutcome cover_error(Verdict v, double elapsed, double limit) {
    return {TaskType::CoverError, v, std::nullopt, elapsed, limit};
  }
  static RunOutcome cover_branches(double coverage, double elapsed, double limit) {
    return {TaskType::CoverBranches, Verdict::Unknown, coverage, elapsed, limit};
  }

  /// Fraction of the budget left when the run finished.
  double rest_time_ratio() const { return (time_limit_seconds - elapsed_seconds) / time_limit_seconds; }

  /// Throws InvalidOutcome when a field is out of range or the coverage
  /// score is present for the wrong task.
  void validate() const {
    if (!(time_limit_seconds > 0) || !std::isfinite(time_limit_seconds))
      throw Error(ErrorCode::InvalidOutcome, "time limit must be positive");
    if (!(elapsed_seconds >= 0) || elapsed_seconds > time_limit_seconds)
      throw Error(ErrorCode::InvalidOutcome, "elapsed time must lie in [0, time limit]");
    if (coverage_score.has_value() != (task == TaskType::CoverBranches))
      throw Error(ErrorCode::InvalidOutcome, "coverage score is present iff task is cover-branches");
    if (coverage_score && !(*coverage_score >= 0.0 && *coverage_score <= 1.0))
      throw Error(ErrorCode::InvalidOutcome, "coverage score must lie in [0, 1]");
  }

  friend bool operator==(const RunOutcome&, const RunOutcome&) = default;
};

/// Ordinal run quality: 0 is a fast, effective run, 5 found nothing.
using ClassLabel = int;

inline constexpr int kClassCount = 6;
inline constexpr int kWorstClass = 5;

inline constexpr std::array<double, 5> kRestTimeThresholds = {0.8, 0.6, 0.4, 0.2, 0.0};
inline constexpr std::array<double, 6> kCoverageThresholds = {0.85, 0.68, 0.51, 0.34, 0.17, 0.0};

/// First threshold the run reaches wins; every comparison is `>=`.
inline ClassLabel classify(const RunOutcome& outcome) {
  outcome.validate();
  if (outcome.task == TaskType::CoverError) {
    if (outcome.verdict != Verdict::BugDetected) return kWorstClass;
    const double ratio = outcome.rest_time_ratio();
    for (std::size_t c = 0; c < kRestTimeThresholds.size(); ++c)
      if (ratio >= kRestTimeThresholds[c]) return static_cast<ClassLabel>(c);
    return kWorstClass;
  }
  const double score = *outcome.coverage_score;
  for (std::size_t c = 0; c < kCoverageThresholds.size(); ++c)
    if (score >= kCoverageThresholds[c]) return static_cast<ClassLabel>(c);
  return kWorstClass;
}

}  // namespace flagsel
