#include <cmath>

#include <gtest/gtest.h>

#include "flagsel/detail/random.hpp"
#include "flagsel/models/mlp.hpp"
#include "support/model_checks.hpp"

using namespace flagsel;
using checks::max_gradient_error;
using checks::random_rows;

TEST(Mlp, GradientMatchesFiniteDifferences21x8x1) {
  EXPECT_LT(max_gradient_error({21, 8, 1}, 1), 1e-4);
}

TEST(Mlp, GradientMatchesFiniteDifferencesOnRandomArchitectures) {
  std::uint64_t seed = 100;
  for (const auto& sizes : checks::random_architectures(20, 2024)) {
    std::string arch;
    for (auto n : sizes) arch += std::to_string(n) + " ";
    EXPECT_LT(max_gradient_error(sizes, seed++), 1e-4) << arch;
  }
}

TEST(Mlp, ConstantLabelIsLearned) {
  auto m = random_rows(3, 200, 21);
  for (auto& y : m.y) y = 2;
  const auto net = train_mlp(m);
  for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_NEAR(net.predict(m.row(i)), 2.0, 0.05);
}

TEST(Mlp, LinearTargetIsFitWithDefaults) {
  // y = x0 + 2 x1 + 2 x2 on the binary cube, each corner repeated.
  TrainingMatrix raw;
  for (int rep = 0; rep < 40; ++rep)
    for (int c = 0; c < 8; ++c) {
      const double x0 = c & 1, x1 = (c >> 1) & 1, x2 = (c >> 2) & 1;
      raw.add_row(std::vector<double>{x0, x1, x2}, static_cast<int>(x0 + 2 * x1 + 2 * x2));
    }
  const auto m = Normalization::fit(raw).apply(raw);
  MlpTrainingReport report;
  const auto net = train_mlp(m, {}, &report);
  ASSERT_EQ(report.epoch_loss.size(), MlpParams{}.epochs);
  double mse = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double e = net.predict(m.row(i)) - m.y[i];
    mse += e * e;
  }
  mse /= static_cast<double>(m.rows());
  EXPECT_LT(mse, 1e-2);
}

TEST(Mlp, TrainingIsDeterministicPerSeed) {
  const auto m = random_rows(8, 120, 5);
  MlpParams p;
  p.epochs = 5;
  EXPECT_EQ(train_mlp(m, p), train_mlp(m, p));
  auto q = p;
  q.seed = 43;
  EXPECT_NE(train_mlp(m, p).params, train_mlp(m, q).params);
}

TEST(Mlp, DivergenceIsReported) {
  const auto m = random_rows(9, 64, 4);
  MlpParams p;
  p.learning_rate = 1e6;
  p.epochs = 50;
  try {
    train_mlp(m, p);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergenceDetected);
  }
}

TEST(Mlp, RejectsBadParameters) {
  const auto m = random_rows(1, 4, 2);
  MlpParams p;
  p.epochs = 0;
  EXPECT_THROW(train_mlp(m, p), Error);
  p = {};
  p.hidden_layers = {4, 0};
  EXPECT_THROW(train_mlp(m, p), Error);
}

TEST(Mlp, RegressionToClassRoundsAndClamps) {
  EXPECT_EQ(regression_to_class(-3.0), 0);
  EXPECT_EQ(regression_to_class(1.49), 1);
  EXPECT_EQ(regression_to_class(1.5), 2);
  EXPECT_EQ(regression_to_class(9.0), 5);
  EXPECT_EQ(regression_to_class(std::nan("")), 5);
}

TEST(Mlp, ParameterLayout) {
  const auto net = Mlp::initialized({3, 2, 1}, 5);
  ASSERT_EQ(net.params.size(), Mlp::parameter_count({3, 2, 1}));
  EXPECT_EQ(net.params.size(), 2u * 4 + 1 * 3);
  // Hidden biases sit after the 2x3 weights and start at zero.
  EXPECT_EQ(net.params[6], 0.0);
  EXPECT_EQ(net.params[7], 0.0);
  EXPECT_EQ(net.params[10], 0.0);
  // With all hidden weights zero the net outputs its output bias.
  auto p = net.params;
  std::fill(p.begin(), p.end(), 0.0);
  p[10] = 1.25;
  EXPECT_EQ(net.forward(p, std::vector<double>{1, 2, 3}, nullptr), 1.25);
}
