#include "odenet/data.hpp"
#include "odenet/knn.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace odenet;

namespace {

Dataset line_set(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  Dataset d;
  d.task = Task::binary;
  d.inputs = Mat(1, static_cast<Eigen::Index>(xs.size()));
  d.targets = Mat(1, static_cast<Eigen::Index>(ys.size()));
  Eigen::Index k = 0;
  for (double x : xs) d.inputs(0, k++) = x;
  k = 0;
  for (double y : ys) d.targets(0, k++) = y;
  return d;
}

}  // namespace

TEST(Knn, Examples) {
  const Dataset d = line_set({0.0, 1.0, 2.0, 3.0}, {0, 0, 1, 1});
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 2.0), 1)(0), 1.0);
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 1.0), 1)(0), 0.0);
  // nearest three to 1.2 carry labels (0, 0, 1)
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 1.2), 3)(0), 0.0);
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 1.8), 3)(0), 1.0);
  // distance tie at 1.5 between samples 1 and 2: lower index wins
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 1.5), 1)(0), 0.0);
  EXPECT_THROW(knn_predict(d, Vec::Constant(1, 0.0), 5), std::invalid_argument);
  EXPECT_THROW(knn_predict(d, Vec::Constant(1, 0.0), 0), std::invalid_argument);
}

TEST(Knn, MulticlassVotesAndTies) {
  Dataset d;
  d.task = Task::multiclass;
  d.inputs = (Mat(1, 4) << 0, 1, 2, 10).finished();
  d.targets = Mat::Zero(3, 4);
  d.targets(2, 0) = d.targets(1, 1) = d.targets(2, 2) = d.targets(0, 3) = 1;
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 1.0), 3), (Vec(3) << 0, 0, 1).finished());
  // two-way vote tie between classes 2 and 1 goes to the lower label
  EXPECT_EQ(knn_predict(d, Vec::Constant(1, 0.9), 2), (Vec(3) << 0, 1, 0).finished());
}

TEST(Knn, PermutationInvariantWithoutTies) {
  Xoshiro256 rng(1);
  const Dataset d = gen_circle(300, 2);
  std::vector<std::size_t> order(300);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  const Dataset shuffled = d.subset(order);
  const Dataset queries = gen_circle(100, 3);
  EXPECT_EQ(knn_predict_all(d, queries.inputs, 3), knn_predict_all(shuffled, queries.inputs, 3));
}

TEST(Knn, EvaluateLossAndAccuracy) {
  const Dataset train = line_set({0.0, 1.0, 2.0, 3.0}, {0, 0, 1, 1});
  const Dataset val = line_set({0.1, 2.9, 1.1}, {0, 1, 1});
  const KnnEvaluation e = knn_evaluate(train, val, 1);
  EXPECT_DOUBLE_EQ(e.accuracy, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.loss, 1.0 / 6.0);
}

TEST(Knn, CircleTaskIsAccurate) {
  const KnnEvaluation e = knn_evaluate(gen_circle(2000, 4), gen_circle(500, 5), 3);
  EXPECT_GT(e.accuracy, 0.95);
}
