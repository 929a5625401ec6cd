#pragma once

#include "odenet/data.hpp"

namespace odenet {

/// Majority label among the k nearest training samples (Euclidean distance,
/// ties broken by lower sample index). Binary tasks vote on the 0/1 target,
/// multiclass tasks on the argmax class; a tied vote goes to the lowest label.
/// Returns the predicted target vector (0/1 scalar or one-hot).
Vec knn_predict(const Dataset& train, const Vec& query, int k);

/// knn_predict for every column of `queries`.
Mat knn_predict_all(const Dataset& train, const Mat& queries, int k);

struct KnnEvaluation {
  double loss = 0.0;  // halved mean squared error of the hard predictions
  double accuracy = 0.0;
};

KnnEvaluation knn_evaluate(const Dataset& train, const Dataset& val, int k);

}  // namespace odenet
