#include <gtest/gtest.h>

#include "flagsel/detail/random.hpp"
#include "flagsel/models/decision_tree.hpp"
#include "support/model_checks.hpp"

using namespace flagsel;
using checks::random_consistent;
using checks::training_accuracy;

namespace {

TrainingMatrix xor_set(std::vector<double> weights) {
  TrainingMatrix m;
  const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const int labels[4] = {0, 0, 1, 1};
  for (int i = 0; i < 4; ++i) m.add_row(std::vector<double>{pts[i][0], pts[i][1]}, labels[i], weights[i]);
  return m;
}

}  // namespace

TEST(DecisionTree, SingleThresholdGivesDepthOne) {
  TrainingMatrix m;
  for (int i = 0; i <= 20; ++i) {
    const double x0 = i / 20.0;
    m.add_row(std::vector<double>{x0, static_cast<double>((i * 7) % 5)}, x0 > 0.5 ? 1 : 0);
  }
  const auto t = train_decision_tree(m);
  EXPECT_EQ(t.depth(), 1u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_GT(t.nodes[0].threshold, 0.5);
  EXPECT_LT(t.nodes[0].threshold, 0.55);
  EXPECT_EQ(training_accuracy(t, m), 1.0);
  EXPECT_FALSE(t.degenerate);
}

TEST(DecisionTree, ConsistentDataIsFitExactly) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto m = random_consistent(seed, 150, 4);
    const auto t = train_decision_tree(m);
    EXPECT_EQ(training_accuracy(t, m), 1.0) << "seed " << seed;
    EXPECT_FALSE(t.degenerate);
  }
}

TEST(DecisionTree, WeightedXorNeedsDepthTwo) {
  for (const auto& w : std::vector<std::vector<double>>{{1, 1, 1, 1}, {3, 0.5, 2, 1}, {0.1, 5, 5, 0.1}}) {
    const auto m = xor_set(w);
    const auto t = train_decision_tree(m);
    EXPECT_EQ(training_accuracy(t, m), 1.0);
    EXPECT_GE(t.depth(), 2u);

    // Every single axis cut leaves one side mixed, so no stump can be exact.
    for (std::size_t f = 0; f < 2; ++f)
      for (double cut : {-0.5, 0.5, 1.5})
        for (int lo : {0, 1})
          for (int hi : {0, 1}) {
            std::size_t hit = 0;
            for (std::size_t i = 0; i < 4; ++i) hit += (m.row(i)[f] <= cut ? lo : hi) == m.y[i] ? 1 : 0;
            EXPECT_LT(hit, 4u);
          }
    EXPECT_LT(training_accuracy(train_decision_tree(m, {.max_depth = 1}), m), 1.0);
  }
}

TEST(DecisionTree, TrainingIsDeterministic) {
  const auto m = random_consistent(77, 300, 6);
  EXPECT_EQ(train_decision_tree(m), train_decision_tree(m));
  EXPECT_EQ(train_decision_tree(m, {.max_depth = 3, .min_samples_leaf = 5}),
            train_decision_tree(m, {.max_depth = 3, .min_samples_leaf = 5}));
}

TEST(DecisionTree, TiesGoToLowestDimension) {
  TrainingMatrix m;
  for (int i = 0; i < 10; ++i) {
    const double v = i;
    m.add_row(std::vector<double>{v, v, v}, i < 5 ? 2 : 4);
  }
  const auto t = train_decision_tree(m);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, 4.5);
}

TEST(DecisionTree, IdenticalRowsWithConflictingLabelsAreFlagged) {
  TrainingMatrix m;
  m.add_row(std::vector<double>{1, 2}, 3, 1.0);
  m.add_row(std::vector<double>{1, 2}, 1, 1.5);
  m.add_row(std::vector<double>{1, 2}, 3, 1.0);
  const auto t = train_decision_tree(m);
  EXPECT_TRUE(t.degenerate);
  EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.predict(std::vector<double>{1, 2}), 3);  // weight 2 vs 1.5

  TrainingMatrix tie;
  tie.add_row(std::vector<double>{0}, 5);
  tie.add_row(std::vector<double>{0}, 2);
  EXPECT_EQ(train_decision_tree(tie).predict(std::vector<double>{0}), 2);
}

TEST(DecisionTree, LimitsAreRespected) {
  const auto m = random_consistent(5, 400, 5);
  const auto shallow = train_decision_tree(m, {.max_depth = 3});
  EXPECT_LE(shallow.depth(), 3u);

  const auto leafy = train_decision_tree(m, {.max_depth = 0, .min_samples_leaf = 20});
  std::vector<std::size_t> reach(leafy.nodes.size(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    int at = 0;
    while (!leafy.nodes[at].is_leaf())
      at = m.row(i)[leafy.nodes[at].feature] <= leafy.nodes[at].threshold ? leafy.nodes[at].left : leafy.nodes[at].right;
    ++reach[at];
  }
  for (std::size_t n = 0; n < leafy.nodes.size(); ++n)
    if (leafy.nodes[n].is_leaf()) {
      EXPECT_GE(reach[n], 20u);
    }
}

TEST(DecisionTree, SingleClassIsOneLeaf) {
  TrainingMatrix m;
  for (int i = 0; i < 5; ++i) m.add_row(std::vector<double>{static_cast<double>(i)}, 4);
  const auto t = train_decision_tree(m);
  EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.predict(std::vector<double>{100}), 4);
}

TEST(DecisionTree, RejectsBadInput) {
  TrainingMatrix m;
  m.add_row(std::vector<double>{0}, 6);
  EXPECT_THROW(train_decision_tree(m), Error);
  TrainingMatrix empty;
  EXPECT_THROW(train_decision_tree(empty), Error);
  TrainingMatrix ok;
  ok.add_row(std::vector<double>{0}, 1);
  EXPECT_THROW(train_decision_tree(ok, {.max_depth = 0, .min_samples_leaf = 0}), Error);
  ok.w[0] = 0;
  EXPECT_THROW(train_decision_tree(ok), Error);
}
