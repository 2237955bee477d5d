#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "flagsel/detail/random.hpp"
#include "flagsel/error.hpp"
#include "flagsel/labeling.hpp"
#include "flagsel/models/training_matrix.hpp"

namespace flagsel {

struct MlpParams {
  std::vector<std::size_t> hidden_layers{32};
  double learning_rate = 0.01;
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double momentum = 0.9;
  std::uint64_t seed = 42;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Fully connected regressor: tanh hidden layers, one linear output.
/// Parameters are stored flat, layer by layer, each layer as its weight
/// matrix (outputs x inputs, row-major) followed by its biases.
struct Mlp {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., 1
  std::vector<double> params;

  static std::size_t parameter_count(const std::vector<std::size_t>& sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
    return n;
  }

  /// Xavier-uniform weights, zero biases.
  static Mlp initialized(std::vector<std::size_t> sizes, std::uint64_t seed) {
    Mlp net;
    net.layer_sizes = std::move(sizes);
    net.params.reserve(parameter_count(net.layer_sizes));
    detail::SplitMix rng(seed);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
      const std::size_t in = net.layer_sizes[l], out = net.layer_sizes[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      for (std::size_t k = 0; k < in * out; ++k) net.params.push_back(rng.uniform(-limit, limit));
      for (std::size_t k = 0; k < out; ++k) net.params.push_back(0.0);
    }
    return net;
  }

  double predict(std::span<const double> x) const { return forward(params, x, nullptr); }

  /// Output with `p` in place of the stored parameters. When `acts` is
  /// given it receives every layer's activations, input first.
  double forward(std::span<const double> p, std::span<const double> x, std::vector<std::vector<double>>* acts) const {
    std::vector<double> cur(x.begin(), x.end()), next;
    if (acts) {
      acts->clear();
      acts->push_back(cur);
    }
    std::size_t offset = 0;
    const std::size_t layers = layer_sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
      const double* w = p.data() + offset;
      const double* b = w + in * out;
      next.assign(out, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) s += wr[i] * cur[i];
        next[o] = l + 1 < layers ? std::tanh(s) : s;
      }
      offset += out * (in + 1);
      cur.swap(next);
      if (acts) acts->push_back(cur);
    }
    return cur[0];
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Weighted mean squared error sum_i w_i (f(x_i) - y_i)^2 / sum_i w_i over
/// `rows`, and its gradient with respect to `p` by backpropagation.
inline double mlp_loss_and_gradient(const Mlp& net, std::span<const double> p, const TrainingMatrix& data,
                                    std::span<const std::size_t> rows, std::vector<double>& grad) {
  grad.assign(p.size(), 0.0);
  double weight_sum = 0;
  for (auto r : rows) weight_sum += data.w[r];
  if (!(weight_sum > 0)) return 0.0;

  const std::size_t layers = net.layer_sizes.size() - 1;
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offsets[l] = off;
    off += net.layer_sizes[l + 1] * (net.layer_sizes[l] + 1);
  }

  double loss = 0;
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  for (auto r : rows) {
    const double out = net.forward(p, data.row(r), &acts);
    const double err = out - data.y[r];
    const double scale = data.w[r] / weight_sum;
    loss += scale * err * err;

    delta.assign(1, 2.0 * scale * err);
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = net.layer_sizes[l], outn = net.layer_sizes[l + 1];
      const double* w = p.data() + offsets[l];
      double* gw = grad.data() + offsets[l];
      double* gb = gw + in * outn;
      const auto& a_in = acts[l];
      for (std::size_t o = 0; o < outn; ++o) {
        const double d = delta[o];
        if (d == 0) continue;
        double* gwr = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) gwr[i] += d * a_in[i];
        gb[o] += d;
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < outn; ++o) {
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) prev_delta[i] += wr[i] * delta[o];
      }
      for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= 1.0 - a_in[i] * a_in[i];  // tanh'
      delta.swap(prev_delta);
    }
  }
  return loss;
}

struct MlpTrainingReport {
  std::vector<double> epoch_loss;  // weighted MSE over the training set
};

/// Mini-batch gradient descent (with heavy-ball momentum) on weighted
/// MSE. Output weights start at zero and the output bias at the weighted
/// mean target, so training starts from the best constant predictor. Deterministic
/// for a given seed. Throws DivergenceDetected if the loss stops being
/// finite.
inline Mlp train_mlp(const TrainingMatrix& data, const MlpParams& params = {}, MlpTrainingReport* report = nullptr) {
  data.validate();
  if (params.batch_size == 0 || params.epochs == 0)
    throw Error(ErrorCode::InvalidArgument, "batch size and epochs must be positive");
  for (auto h : params.hidden_layers)
    if (h == 0) throw Error(ErrorCode::InvalidArgument, "hidden layers must be non-empty");

  std::vector<std::size_t> sizes{data.dims};
  sizes.insert(sizes.end(), params.hidden_layers.begin(), params.hidden_layers.end());
  sizes.push_back(1);
  Mlp net = Mlp::initialized(sizes, params.seed);
  const std::size_t last_hidden = sizes[sizes.size() - 2];
  std::fill(net.params.end() - static_cast<std::ptrdiff_t>(last_hidden + 1), net.params.end(), 0.0);

  double wsum = 0, wy = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    wsum += data.w[i];
    wy += data.w[i] * data.y[i];
  }
  net.params.back() = wy / wsum;

  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  detail::SplitMix rng(detail::hash_combine(params.seed, 0x5eed));
  std::vector<double> grad, velocity(net.params.size(), 0.0);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      double batch_weight = 0;
      for (auto r : batch) batch_weight += data.w[r];
      const double loss = mlp_loss_and_gradient(net, net.params, data, batch, grad);
      epoch_loss += loss * batch_weight / wsum;
      for (std::size_t k = 0; k < net.params.size(); ++k) {
        velocity[k] = params.momentum * velocity[k] - params.learning_rate * grad[k];
        net.params[k] += velocity[k];
      }
    }
    if (!std::isfinite(epoch_loss))
      throw Error(ErrorCode::DivergenceDetected,
                  "loss became non-finite in epoch " + std::to_string(epoch + 1) + "; lower the learning rate");
    if (report) report->epoch_loss.push_back(epoch_loss);
  }
  return net;
}

/// Reported class of a raw regression output: nearest class in [0, 5].
inline int regression_to_class(double raw) {
  if (!std::isfinite(raw)) return kWorstClass;
  return static_cast<int>(std::clamp(std::lround(raw), 0L, static_cast<long>(kWorstClass)));
}

}  // namespace flagsel
