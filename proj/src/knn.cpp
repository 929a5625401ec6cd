#include "odenet/knn.hpp"

#include "odenet/adjoint.hpp"
#include "odenet/errors.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace odenet {
namespace {

Eigen::Index label_of(const Dataset& data, Eigen::Index k) {
  if (data.task == Task::multiclass) return argmax(data.targets.col(k));
  return data.targets(0, k) >= 0.5 ? 1 : 0;
}

}  // namespace

Vec knn_predict(const Dataset& train, const Vec& query, int k) {
  if (train.task == Task::regression) throw std::invalid_argument("knn: classification tasks only");
  if (train.size() == 0) throw ShapeError("knn: empty training set");
  if (k < 1 || k > train.size()) {
    throw std::invalid_argument("knn: k=" + std::to_string(k) + " must lie in [1, " +
                                std::to_string(train.size()) + "]");
  }
  if (query.size() != train.n()) throw ShapeError("knn: query dimension mismatch");

  const Vec dist = (train.inputs.colwise() - query).colwise().squaredNorm().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&dist](Eigen::Index a, Eigen::Index b) {
                      return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
                    });

  const Eigen::Index classes = train.task == Task::multiclass ? train.m() : 2;
  std::vector<int> votes(static_cast<std::size_t>(classes), 0);
  for (int i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(label_of(train, order[static_cast<std::size_t>(i)]))];
  const auto winner = static_cast<Eigen::Index>(
      std::max_element(votes.begin(), votes.end()) - votes.begin());

  if (train.task == Task::binary) return Vec::Constant(1, static_cast<double>(winner));
  Vec out = Vec::Zero(train.m());
  out(winner) = 1.0;
  return out;
}

Mat knn_predict_all(const Dataset& train, const Mat& queries, int k) {
  Mat out(train.m(), queries.cols());
  for (Eigen::Index q = 0; q < queries.cols(); ++q) out.col(q) = knn_predict(train, queries.col(q), k);
  return out;
}

KnnEvaluation knn_evaluate(const Dataset& train, const Dataset& val, int k) {
  const Mat pred = knn_predict_all(train, val.inputs, k);
  return {minibatch_loss(pred, val.targets), accuracy(pred, val.targets, val.task)};
}

}  // namespace odenet
