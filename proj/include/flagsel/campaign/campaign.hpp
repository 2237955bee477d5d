#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "flagsel/campaign/benchmark.hpp"
#include "flagsel/campaign/dataset.hpp"
#include "flagsel/campaign/runner.hpp"
#include "flagsel/error.hpp"
#include "flagsel/flagspace.hpp"

namespace flagsel {

struct CampaignOptions {
  std::size_t jobs = 1;
  BackendArgMap arg_map = BackendArgMap::defaults();
  ExtractOptions extract;
  /// (benchmark id, canonical flag index) pairs that already have a record.
  std::set<std::pair<std::string, std::size_t>> skip;
  /// Called after each finished run with (done, total); serialized.
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Runs every (benchmark, flags) pair not in `options.skip` and returns the
/// records in benchmark order, then flag order, whatever the interleaving
/// of the workers. A run that throws or returns an invalid outcome becomes
/// a class-5 record with a note; only manifest problems abort, and they do
/// so before the first run.
inline Dataset run_campaign(const std::vector<BenchmarkEntry>& manifest, const BackendRunner& runner,
                            const std::vector<FlagConfiguration>& flags, const CampaignOptions& options = {}) {
  if (manifest.empty()) throw Error(ErrorCode::ManifestError, "manifest is empty");
  if (options.jobs == 0) throw Error(ErrorCode::InvalidArgument, "jobs must be positive");
  {
    std::set<std::string> ids;
    for (const auto& b : manifest)
      if (!ids.insert(b.id).second) throw Error(ErrorCode::ManifestError, "duplicate benchmark id '" + b.id + "'");
  }
  const std::vector<FeatureVector> features = profile_benchmarks(manifest, options.extract);

  std::vector<std::vector<std::string>> args;
  args.reserve(flags.size());
  for (const auto& c : flags) args.push_back(to_backend_args(c, options.arg_map));

  struct Task {
    std::size_t benchmark;
    std::size_t flag;
  };
  std::vector<Task> tasks;
  for (std::size_t b = 0; b < manifest.size(); ++b)
    for (std::size_t f = 0; f < flags.size(); ++f)
      if (!options.skip.count({manifest[b].id, canonical_index(flags[f])})) tasks.push_back({b, f});

  Dataset records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const BenchmarkEntry& bench = manifest[tasks[t].benchmark];
      const FeatureVector& feat = features[tasks[t].benchmark];
      const FlagConfiguration& config = flags[tasks[t].flag];

      RunResult result{failed_outcome(bench.task, bench.time_limit_seconds), {}};
      try {
        result = runner.run(RunRequest{bench, feat, config, args[tasks[t].flag]});
        result.outcome.validate();
        if (result.outcome.task != bench.task)
          throw Error(ErrorCode::InvalidOutcome, "backend answered for the wrong task type");
      } catch (const std::exception& e) {
        result = {failed_outcome(bench.task, bench.time_limit_seconds), std::string("run failed: ") + e.what()};
      }
      records[t] = make_record(bench.id, feat, config, result.outcome, std::move(result.note));

      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(++done, tasks.size());
      }
    }
  };

  const std::size_t workers = std::min(options.jobs, std::max<std::size_t>(tasks.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  return records;
}

/// Every configuration of the flag space.
inline Dataset run_campaign(const std::vector<BenchmarkEntry>& manifest, const BackendRunner& runner,
                            const CampaignOptions& options = {}) {
  return run_campaign(manifest, runner, enumerate_flags(), options);
}

/// Merges previously recorded runs with new ones into canonical order
/// (manifest order, then flag index). Records for benchmarks not in the
/// manifest are dropped; on duplicates the fresh record wins.
inline Dataset merge_in_canonical_order(const std::vector<BenchmarkEntry>& manifest, const Dataset& previous,
                                        const Dataset& fresh) {
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, const DatasetRecord*>> keyed;
  auto position = [&](const std::string& id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < manifest.size(); ++i)
      if (manifest[i].id == id) return i;
    return std::nullopt;
  };
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Dataset* part : {&fresh, &previous}) {
    for (const auto& r : *part) {
      const auto pos = position(r.benchmark_id);
      if (!pos) continue;
      const std::pair key{*pos, canonical_index(r.flags)};
      if (seen.insert(key).second) keyed.push_back({key, &r});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Dataset out;
  out.reserve(keyed.size());
  for (const auto& [key, r] : keyed) out.push_back(*r);
  return out;
}

}  // namespace flagsel
