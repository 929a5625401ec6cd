#pragma once

#include "odenet/linalg.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace odenet {

enum class Task { regression, binary, multiclass };

std::string_view task_name(Task task);
Task parse_task(std::string_view text);

/// Samples stored column-wise: inputs is n x K, targets is m x K.
struct Dataset {
  Mat inputs;
  Mat targets;
  Task task = Task::regression;

  Eigen::Index size() const { return inputs.cols(); }
  Eigen::Index n() const { return inputs.rows(); }
  Eigen::Index m() const { return targets.rows(); }

  /// Columns picked by `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Throws FormatError when the task invariants (finite, 0/1, one-hot) fail.
  void validate() const;
};

/// ξ_k = (k-1)/K, F(ξ) = sin(4πξ), k = 1..K.
Dataset gen_sinusoid(Eigen::Index count);

/// 0 inside the disc |ξ - (0.5, 0.5)| < 0.3, 1 on and outside its boundary.
double circle_label(double x0, double x1);

/// K points drawn uniformly from [0,1]² (x then y per point, xoshiro256**),
/// labelled by circle_label.
Dataset gen_circle(Eigen::Index count, std::uint64_t seed);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801),
/// gzip-compressed or raw. Pixels are scaled by 1/255; labels become one-hot
/// vectors of length 10.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::optional<std::size_t> limit = std::nullopt);

/// Writes IDX files (raw bytes; gzip-compressed when the path ends in ".gz").
void write_idx_images(const std::string& path, std::uint32_t rows, std::uint32_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);

/// Seeded Fisher-Yates shuffle, then the first round(fraction·K) samples train.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

/// binary: prediction >= 0.5 means class 1. multiclass: argmax, ties to the
/// lowest index. Regression is rejected.
double accuracy(const Mat& predictions, const Mat& targets, Task task);

/// Index of the largest entry, lowest index on ties.
Eigen::Index argmax(const Vec& v);

/// CSV with a header `x0,..,x{n-1},y0,..,y{m-1}`.
Dataset load_csv_dataset(const std::string& path, Task task);
void save_csv_dataset(const std::string& path, const Dataset& data);

/// CSV of inputs only (`x0..x{n-1}` header); also accepts files carrying
/// extra `y*` columns, which are ignored.
Mat load_csv_inputs(const std::string& path);

}  // namespace odenet
