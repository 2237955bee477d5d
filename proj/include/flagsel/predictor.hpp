#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "flagsel/campaign/benchmark.hpp"
#include "flagsel/error.hpp"
#include "flagsel/features.hpp"
#include "flagsel/flagspace.hpp"
#include "flagsel/labeling.hpp"
#include "flagsel/models/model.hpp"
#include "flagsel/models/training_matrix.hpp"

namespace flagsel {

struct RankedConfiguration {
  FlagConfiguration config;
  std::size_t canonical_index = 0;
  PredictionKey key;
};

/// Resource-first ordering among equal predicted keys: fuzzing off before
/// on and shorter before longer, unwind 10 before unlimited, lower k-step,
/// then lower canonical index.
inline bool cheaper_configuration(const FlagConfiguration& a, const FlagConfiguration& b) {
  auto rank = [](const FlagConfiguration& c) {
    return std::tuple{static_cast<int>(c.fuzz), static_cast<int>(c.unwind), c.k_step(), canonical_index(c)};
  };
  return rank(a) < rank(b);
}

/// Total order used to pick the recommendation: predicted key first, then
/// cheaper_configuration.
inline bool ranks_before(const RankedConfiguration& a, const RankedConfiguration& b) {
  if (a.key < b.key) return true;
  if (b.key < a.key) return false;
  return cheaper_configuration(a.config, b.config);
}

/// Positions of `ranked` sorted best-first under ranks_before.
inline std::vector<std::size_t> rank_order(std::span<const RankedConfiguration> ranked) {
  std::vector<std::size_t> order(ranked.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ranks_before(ranked[a], ranked[b]); });
  return order;
}

struct RecommendOptions {
  std::size_t jobs = 1;
  std::size_t top_n = 10;
  BackendArgMap arg_map = BackendArgMap::defaults();
};

struct Recommendation {
  FeatureVector features;
  FlagConfiguration config;
  std::size_t canonical_index = 0;
  PredictionKey key;
  std::vector<std::string> backend_args;
  std::vector<RankedConfiguration> top;  // best first, diagnostics only
  std::size_t evaluations = 0;
};

/// Scores all 384 configurations for a program with `features` and
/// returns the best one. Evaluations may run on `options.jobs` threads;
/// the result is identical to the sequential one.
inline Recommendation recommend(const FeatureVector& features, const TrainedModel& model, TaskType task,
                                const RecommendOptions& options = {}) {
  model.check_feature_order(input_feature_order());
  if (model.task && *model.task != task)
    throw Error(ErrorCode::InvalidArgument, "model was trained for " + std::string(to_string(*model.task)) +
                                                ", not " + std::string(to_string(task)));

  const auto configs = enumerate_flags();
  std::vector<RankedConfiguration> ranked(configs.size());
  std::atomic<std::size_t> evaluations{0};
  auto evaluate_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = encode_input(features, configs[i]);
      ranked[i] = {configs[i], i, model.predict_key(x)};
      ++evaluations;
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, configs.size());
  if (jobs == 1) {
    evaluate_range(0, configs.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (configs.size() + jobs - 1) / jobs;
    for (std::size_t begin = 0; begin < configs.size(); begin += chunk)
      pool.emplace_back(evaluate_range, begin, std::min(configs.size(), begin + chunk));
  }

  const auto order = rank_order(ranked);
  Recommendation rec;
  rec.features = features;
  rec.evaluations = evaluations.load();
  const auto& best = ranked[order.front()];
  rec.config = best.config;
  rec.canonical_index = best.canonical_index;
  rec.key = best.key;
  rec.backend_args = to_backend_args(best.config, options.arg_map);
  for (std::size_t k = 0; k < std::min(options.top_n, order.size()); ++k) rec.top.push_back(ranked[order[k]]);
  return rec;
}

inline Recommendation recommend_file(const std::filesystem::path& program, const TrainedModel& model, TaskType task,
                                     const RecommendOptions& options = {}, const ExtractOptions& extract = {}) {
  model.check_feature_order(input_feature_order());
  return recommend(extract_features(read_text_file(program), extract), model, task, options);
}

inline nlohmann::ordered_json to_json(const Recommendation& r) {
  nlohmann::ordered_json j;
  j["recommended_flags"] = to_canonical_text(r.config);
  j["canonical_index"] = r.canonical_index;
  j["predicted_key"] = r.key.parts;
  j["backend_args"] = r.backend_args;
  j["evaluations"] = r.evaluations;
  j["top"] = nlohmann::ordered_json::array();
  for (const auto& t : r.top)
    j["top"].push_back({{"flags", to_canonical_text(t.config)},
                        {"canonical_index", t.canonical_index},
                        {"predicted_key", t.key.parts}});
  return j;
}

}  // namespace flagsel
