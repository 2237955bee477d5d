#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flagsel/campaign/dataset.hpp"
#include "flagsel/detail/random.hpp"
#include "flagsel/error.hpp"
#include "flagsel/features.hpp"
#include "flagsel/flagspace.hpp"
#include "flagsel/labeling.hpp"

namespace flagsel {

inline constexpr std::size_t kFlagEncodingDims = 11;
inline constexpr std::size_t kInputDims = kFeatureCount + kFlagEncodingDims;

/// Flag encoding appended after the 21 program features: one-hot for the
/// categorical fields, plain numbers for the rest (unwind unlimited = -1,
/// fuzz off = enabled 0 with 0 seconds).
inline constexpr std::array<std::string_view, kFlagEncodingDims> kFlagEncodingNames = {
    "strategy=incremental", "strategy=k-induction", "solver=boolector", "solver=z3",
    "encoding=floatbv",     "encoding=fixedbv",     "k_step",           "context_bound",
    "unwind",               "fuzz_enabled",         "fuzz_seconds"};

inline std::vector<std::string> input_feature_order() {
  std::vector<std::string> order;
  for (auto n : kFeatureNames) order.emplace_back(n);
  for (auto n : kFlagEncodingNames) order.emplace_back(n);
  return order;
}

using InputVector = std::array<double, kInputDims>;

inline InputVector encode_input(const FeatureVector& features, const FlagConfiguration& c) {
  InputVector x{};
  const auto f = features.to_array();
  std::copy(f.begin(), f.end(), x.begin());
  double* flag = x.data() + kFeatureCount;
  flag[0] = c.strategy == Strategy::Incremental ? 1 : 0;
  flag[1] = c.strategy == Strategy::KInduction ? 1 : 0;
  flag[2] = c.solver == Solver::Boolector ? 1 : 0;
  flag[3] = c.solver == Solver::Z3 ? 1 : 0;
  flag[4] = c.encoding == Encoding::FloatBV ? 1 : 0;
  flag[5] = c.encoding == Encoding::FixedBV ? 1 : 0;
  flag[6] = c.k_step();
  flag[7] = c.context_bound();
  flag[8] = c.unwind == Unwind::Bounded10 ? static_cast<double>(kUnwindBound) : -1.0;
  flag[9] = c.fuzz_enabled() ? 1 : 0;
  flag[10] = c.fuzz_seconds();
  return x;
}

/// Class-frequency weight N / (K * count) kept as a reduced fraction.
struct SampleWeight {
  std::uint64_t numerator = 1;
  std::uint64_t denominator = 1;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const SampleWeight&, const SampleWeight&) = default;
};

/// w_i = N / (K * count(class_i)), with N samples and K distinct classes.
/// Every present class ends up with total weight N / K, and the weights
/// sum to N.
inline std::vector<SampleWeight> compute_sample_weight_fractions(std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "no labels to weight");
  std::map<int, std::uint64_t> counts;
  for (int y : labels) ++counts[y];
  const std::uint64_t n = labels.size();
  const std::uint64_t k = counts.size();
  std::vector<SampleWeight> out;
  out.reserve(labels.size());
  for (int y : labels) {
    const std::uint64_t d = k * counts[y], g = std::gcd(n, d);
    out.push_back({n / g, d / g});
  }
  return out;
}

inline std::vector<double> compute_sample_weights(std::span<const int> labels) {
  std::vector<double> out;
  for (const auto& w : compute_sample_weight_fractions(labels)) out.push_back(w.value());
  return out;
}

/// Dense row-major design matrix with labels and sample weights.
struct TrainingMatrix {
  std::size_t dims = 0;
  std::vector<double> x;
  std::vector<int> y;
  std::vector<double> w;
  std::vector<std::string> feature_order;
  std::vector<std::string> groups;  // benchmark id of each row

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dims, dims}; }

  void add_row(std::span<const double> values, int label, double weight = 1.0, std::string group = {}) {
    if (dims == 0 && rows() == 0) dims = values.size();
    if (values.size() != dims) throw Error(ErrorCode::InvalidArgument, "row dimension mismatch");
    x.insert(x.end(), values.begin(), values.end());
    y.push_back(label);
    w.push_back(weight);
    groups.push_back(std::move(group));
  }

  std::size_t distinct_classes() const {
    std::map<int, int> seen;
    for (int v : y) seen[v] = 1;
    return seen.size();
  }

  /// Throws InvalidArgument unless every weight is finite and positive and
  /// every row has `dims` entries.
  void validate() const {
    if (rows() == 0) throw Error(ErrorCode::InvalidArgument, "training matrix is empty");
    if (x.size() != rows() * dims || w.size() != rows())
      throw Error(ErrorCode::InvalidArgument, "training matrix shape is inconsistent");
    for (double v : w)
      if (!std::isfinite(v) || !(v > 0)) throw Error(ErrorCode::InvalidArgument, "sample weights must be positive");
    for (double v : x)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite input value");
  }

  /// Rows selected by `keep`, with weights recomputed for the subset.
  TrainingMatrix subset(const std::vector<bool>& keep) const {
    TrainingMatrix out;
    out.dims = dims;
    out.feature_order = feature_order;
    for (std::size_t i = 0; i < rows(); ++i)
      if (keep[i]) out.add_row(row(i), y[i], 1.0, groups[i]);
    if (out.rows() > 0) out.w = compute_sample_weights(out.y);
    return out;
  }
};

/// Design matrix of every record of `task` (all records when no task is
/// given), weighted by class frequency.
inline TrainingMatrix build_training_matrix(const Dataset& records, std::optional<TaskType> task = std::nullopt) {
  TrainingMatrix m;
  m.dims = kInputDims;
  m.feature_order = input_feature_order();
  for (const auto& r : records) {
    if (task && r.task != *task) continue;
    const auto x = encode_input(r.features, r.flags);
    m.add_row(x, r.label, 1.0, r.benchmark_id);
  }
  if (m.rows() > 0) m.w = compute_sample_weights(m.y);
  return m;
}

/// True for rows whose benchmark hashes into the validation share. All
/// rows of one benchmark land on the same side.
inline std::vector<bool> validation_mask(const std::vector<std::string>& groups, double holdout_fraction) {
  std::vector<bool> mask(groups.size(), false);
  if (holdout_fraction <= 0) return mask;
  const auto cut = static_cast<std::uint64_t>(std::llround(holdout_fraction * 10000.0));
  for (std::size_t i = 0; i < groups.size(); ++i)
    mask[i] = detail::splitmix64(detail::fnv1a64(groups[i])) % 10000 < cut;
  return mask;
}

/// Per-dimension z-score parameters. Constant dimensions get scale 1.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Normalization fit(const TrainingMatrix& m) {
    Normalization n;
    n.mean.assign(m.dims, 0.0);
    n.scale.assign(m.dims, 1.0);
    const double rows = static_cast<double>(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t d = 0; d < m.dims; ++d) n.mean[d] += m.x[i * m.dims + d];
    for (auto& v : n.mean) v /= rows;
    std::vector<double> var(m.dims, 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t d = 0; d < m.dims; ++d) {
        const double diff = m.x[i * m.dims + d] - n.mean[d];
        var[d] += diff * diff;
      }
    for (std::size_t d = 0; d < m.dims; ++d) {
      const double sd = std::sqrt(var[d] / rows);
      n.scale[d] = sd > 1e-12 ? sd : 1.0;
    }
    return n;
  }

  static Normalization identity(std::size_t dims) {
    return {std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t d = 0; d < in.size(); ++d) out[d] = (in[d] - mean[d]) / scale[d];
  }

  std::vector<double> apply(std::span<const double> in) const {
    std::vector<double> out(in.size());
    apply(in, out);
    return out;
  }

  TrainingMatrix apply(const TrainingMatrix& m) const {
    TrainingMatrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
      apply(m.row(i), std::span<double>(out.x.data() + i * m.dims, m.dims));
    return out;
  }

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

}  // namespace flagsel
