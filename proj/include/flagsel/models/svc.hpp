#pragma once

// Soft-margin support vector classification, one machine per class
// (one-vs-rest), each solved with SMO using second-order working-set
// selection. Sample weights scale the box: 0 <= alpha_i <= C * w_i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <numeric>
#include <span>
#include <vector>

#include "flagsel/detail/random.hpp"
#include "flagsel/error.hpp"
#include "flagsel/labeling.hpp"
#include "flagsel/models/training_matrix.hpp"

namespace flagsel {

enum class KernelKind { Linear, Rbf };

struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 0;

  double operator()(std::span<const double> a, std::span<const double> b) const {
    if (kind == KernelKind::Linear) {
      double s = 0;
      for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
      return s;
    }
    double s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      const double diff = a[d] - b[d];
      s += diff * diff;
    }
    return std::exp(-gamma * s);
  }

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

struct SvcParams {
  double C = 1.0;
  KernelKind kernel = KernelKind::Rbf;
  double gamma = 0;  // 0 = 1 / dims
  double tolerance = 1e-3;
  std::size_t max_iterations = 0;  // per machine; 0 = max(100000, 50 * rows)
  std::size_t max_rows = 4000;     // deterministic subsample above this; 0 = all rows
  std::uint64_t subsample_seed = 0;
  std::size_t cache_megabytes = 256;

  friend bool operator==(const SvcParams&, const SvcParams&) = default;
};

/// Kernel matrix rows over a fixed training set, computed on demand and
/// kept in an LRU cache. Holds at least two rows, so the row most
/// recently returned survives the next call.
class KernelCache {
 public:
  KernelCache(const TrainingMatrix& data, Kernel kernel, std::size_t megabytes)
      : data_(data), kernel_(kernel), rows_(data.rows()), where_(data.rows()), cached_(data.rows(), false) {
    const std::size_t row_bytes = std::max<std::size_t>(1, data.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, megabytes * 1024 * 1024 / row_bytes);
    diag_.resize(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) diag_[i] = kernel_(data.row(i), data.row(i));
  }

  std::size_t size() const { return data_.rows(); }
  double diagonal(std::size_t i) const { return diag_[i]; }

  const std::vector<double>& row(std::size_t i) {
    if (cached_[i]) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      cached_[victim] = false;
      std::vector<double>().swap(rows_[victim]);
    }
    auto& r = rows_[i];
    r.resize(data_.rows());
    const auto xi = data_.row(i);
    for (std::size_t t = 0; t < data_.rows(); ++t) r[t] = kernel_(xi, data_.row(t));
    lru_.push_front(i);
    where_[i] = lru_.begin();
    cached_[i] = true;
    return r;
  }

 private:
  const TrainingMatrix& data_;
  Kernel kernel_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::vector<bool> cached_;
  std::list<std::size_t> lru_;
  std::vector<double> diag_;
  std::size_t capacity_ = 2;
};

struct BinarySmoResult {
  std::vector<double> alpha;
  double rho = 0;  // decision f(x) = sum_i alpha_i y_i K(x_i, x) - rho
  std::size_t iterations = 0;
  bool converged = false;
};

/// Solves min 1/2 a'Qa - e'a subject to y'a = 0 and 0 <= a_i <= upper[i],
/// with Q_ij = y_i y_j K_ij, until the maximal violating pair is within
/// `tolerance`.
inline BinarySmoResult solve_binary_smo(KernelCache& kernel, std::span<const int> y, std::span<const double> upper,
                                        double tolerance, std::size_t max_iterations) {
  constexpr double kTau = 1e-12;
  const std::size_t n = kernel.size();
  BinarySmoResult res;
  res.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& a = res.alpha;

  auto at_upper = [&](std::size_t t) { return a[t] >= upper[t]; };
  auto at_lower = [&](std::size_t t) { return a[t] <= 0; };

  while (res.iterations < max_iterations) {
    // i: maximal -y_t G_t over I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == +1) {
        if (!at_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!at_lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    // j: largest second-order objective decrease among I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      const auto& ki = kernel.row(static_cast<std::size_t>(i));
      const double kii = kernel.diagonal(static_cast<std::size_t>(i));
      for (std::size_t t = 0; t < n; ++t) {
        double grad_diff;
        if (y[t] == +1) {
          if (at_lower(t)) continue;
          gmax2 = std::max(gmax2, grad[t]);
          grad_diff = gmax + grad[t];
        } else {
          if (at_upper(t)) continue;
          gmax2 = std::max(gmax2, -grad[t]);
          grad_diff = gmax - grad[t];
        }
        if (grad_diff > 0) {
          double quad = kii + kernel.diagonal(t) - 2.0 * ki[t];
          if (quad <= 0) quad = kTau;
          const double obj = -(grad_diff * grad_diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tolerance) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
    const auto& ki = kernel.row(ui);
    const auto& kj = kernel.row(uj);
    const double ci = upper[ui], cj = upper[uj];
    const double old_ai = a[ui], old_aj = a[uj];
    double quad = kernel.diagonal(ui) + kernel.diagonal(uj) - 2.0 * ki[uj];
    if (quad <= 0) quad = kTau;

    if (y[ui] != y[uj]) {
      const double delta = (-grad[ui] - grad[uj]) / quad;
      const double diff = a[ui] - a[uj];
      a[ui] += delta;
      a[uj] += delta;
      if (diff > 0) {
        if (a[uj] < 0) {
          a[uj] = 0;
          a[ui] = diff;
        }
      } else if (a[ui] < 0) {
        a[ui] = 0;
        a[uj] = -diff;
      }
      if (diff > ci - cj) {
        if (a[ui] > ci) {
          a[ui] = ci;
          a[uj] = ci - diff;
        }
      } else if (a[uj] > cj) {
        a[uj] = cj;
        a[ui] = cj + diff;
      }
    } else {
      const double delta = (grad[ui] - grad[uj]) / quad;
      const double sum = a[ui] + a[uj];
      a[ui] -= delta;
      a[uj] += delta;
      if (sum > ci) {
        if (a[ui] > ci) {
          a[ui] = ci;
          a[uj] = sum - ci;
        }
      } else if (a[uj] < 0) {
        a[uj] = 0;
        a[ui] = sum;
      }
      if (sum > cj) {
        if (a[uj] > cj) {
          a[uj] = cj;
          a[ui] = sum - cj;
        }
      } else if (a[ui] < 0) {
        a[ui] = 0;
        a[uj] = sum;
      }
    }

    const double dai = a[ui] - old_ai, daj = a[uj] - old_aj;
    const double si = y[ui] * dai, sj = y[uj] * daj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (si * ki[t] + sj * kj[t]);
  }

  // Offset: mean of y_t G_t over free vectors, else middle of the feasible
  // interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] == +1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  res.rho = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2;
  return res;
}

/// One-vs-rest machines sharing a pool of support vectors (normalized
/// inputs).
struct SvcModel {
  Kernel kernel;
  std::size_t dims = 0;
  std::vector<int> classes;
  std::vector<double> support_vectors;  // row-major, dims per row

  struct Machine {
    std::vector<std::uint32_t> support;  // rows of support_vectors
    std::vector<double> coef;            // alpha_i * y_i
    double rho = 0;
    friend bool operator==(const Machine&, const Machine&) = default;
  };
  std::vector<Machine> machines;  // parallel to classes
  bool converged = true;

  std::size_t support_count() const { return dims == 0 ? 0 : support_vectors.size() / dims; }

  std::vector<double> decision_values(std::span<const double> x) const {
    std::vector<double> k(support_count());
    for (std::size_t s = 0; s < k.size(); ++s)
      k[s] = kernel(std::span<const double>(support_vectors.data() + s * dims, dims), x);
    std::vector<double> out;
    out.reserve(machines.size());
    for (const auto& m : machines) {
      double f = -m.rho;
      for (std::size_t t = 0; t < m.support.size(); ++t) f += m.coef[t] * k[m.support[t]];
      out.push_back(f);
    }
    return out;
  }

  /// Class with the largest decision value; ties go to the lower class.
  int predict(std::span<const double> x) const {
    const auto f = decision_values(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < f.size(); ++c)
      if (f[c] > f[best]) best = c;
    return classes[best];
  }

  friend bool operator==(const SvcModel&, const SvcModel&) = default;
};

/// Rows kept when a matrix exceeds `max_rows`: the first `max_rows` by a
/// seeded hash of the row index, returned in ascending order.
inline std::vector<bool> svc_subsample_mask(std::size_t rows, std::size_t max_rows, std::uint64_t seed) {
  std::vector<bool> keep(rows, true);
  if (max_rows == 0 || rows <= max_rows) return keep;
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked(rows);
  for (std::size_t i = 0; i < rows; ++i) ranked[i] = {detail::hash_combine(seed, i), i};
  std::sort(ranked.begin(), ranked.end());
  std::fill(keep.begin(), keep.end(), false);
  for (std::size_t k = 0; k < max_rows; ++k) keep[ranked[k].second] = true;
  return keep;
}

/// Trains on already-normalized inputs. Needs at least two classes.
/// `converged` is false when some machine hit the iteration cap; that
/// machine still holds its best iterate.
inline SvcModel train_svc(const TrainingMatrix& data, const SvcParams& params = {}) {
  data.validate();
  if (data.distinct_classes() < 2) throw Error(ErrorCode::InvalidArgument, "SVC needs at least two classes");
  if (!(params.C > 0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");

  TrainingMatrix sub;
  const TrainingMatrix* m = &data;
  if (params.max_rows != 0 && data.rows() > params.max_rows) {
    const auto keep = svc_subsample_mask(data.rows(), params.max_rows, params.subsample_seed);
    sub.dims = data.dims;
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (keep[i]) sub.add_row(data.row(i), data.y[i], data.w[i]);
    m = &sub;
  }

  SvcModel model;
  model.kernel = {params.kernel, params.gamma > 0 ? params.gamma : 1.0 / static_cast<double>(m->dims)};
  model.dims = m->dims;
  for (int y : m->y)
    if (std::find(model.classes.begin(), model.classes.end(), y) == model.classes.end()) model.classes.push_back(y);
  std::sort(model.classes.begin(), model.classes.end());

  const std::size_t n = m->rows();
  const std::size_t cap = params.max_iterations ? params.max_iterations : std::max<std::size_t>(100000, 50 * n);
  KernelCache cache(*m, model.kernel, params.cache_megabytes);
  std::vector<double> upper(n);
  for (std::size_t i = 0; i < n; ++i) upper[i] = params.C * m->w[i];

  std::vector<std::int64_t> pool_slot(n, -1);
  std::vector<int> y(n);
  for (int cls : model.classes) {
    for (std::size_t i = 0; i < n; ++i) y[i] = m->y[i] == cls ? +1 : -1;
    const BinarySmoResult r = solve_binary_smo(cache, y, upper, params.tolerance, cap);
    model.converged = model.converged && r.converged;

    SvcModel::Machine machine;
    machine.rho = r.rho;
    for (std::size_t i = 0; i < n; ++i) {
      if (r.alpha[i] <= 0) continue;
      if (pool_slot[i] < 0) {
        pool_slot[i] = static_cast<std::int64_t>(model.support_count());
        const auto row = m->row(i);
        model.support_vectors.insert(model.support_vectors.end(), row.begin(), row.end());
      }
      machine.support.push_back(static_cast<std::uint32_t>(pool_slot[i]));
      machine.coef.push_back(r.alpha[i] * y[i]);
    }
    model.machines.push_back(std::move(machine));
  }
  return model;
}

}  // namespace flagsel
