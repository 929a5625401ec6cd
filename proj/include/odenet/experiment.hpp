#pragma once

#include "odenet/config.hpp"
#include "odenet/data.hpp"
#include "odenet/model.hpp"
#include "odenet/optimizer.hpp"

#include <string>

namespace odenet {

/// m x n matrix with orthonormal rows: Gaussian draws (xoshiro256**, Box-Muller)
/// filled row by row, then modified Gram-Schmidt over the rows.
Mat random_orthogonal(Eigen::Index m, Eigen::Index n, std::uint64_t seed);

/// `random_orthogonal:SEED` or m·n numbers (row-major, whitespace or commas).
Mat parse_matrix_spec(const std::string& text, Eigen::Index m, Eigen::Index n);

/// Reads m·n whitespace-separated numbers from a file.
Mat load_matrix_file(const std::string& path, Eigen::Index m, Eigen::Index n);

struct ModelSetup {
  ODENetSpec spec;
  ParamPath init;
};

/// [model] n, m, L, activation, T (default 1), A (default random_orthogonal:0);
/// [train] init (zeros|eps).
ModelSetup model_from_config(const Config& cfg);

/// [train] tau, max_epochs, batch_size (required), tau1, method, eta_stop,
/// seed, adjoint (euler|exact).
OptimizerConfig optimizer_from_config(const Config& cfg);

struct DataSetup {
  Dataset train;
  Dataset val;
};

/// [data] dataset = sin | circle | mnist | csv:PATH plus count, val_count,
/// seed, task, split_fraction, limit, mnist_dir, val_csv.
DataSetup data_from_config(const Config& cfg);

/// Every key accepted by the train/evaluate/gradcheck commands.
const std::set<std::string>& known_config_keys();

}  // namespace odenet
