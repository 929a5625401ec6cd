#pragma once

#include "odenet/adjoint.hpp"
#include "odenet/data.hpp"
#include "odenet/model.hpp"
#include "odenet/rng.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace odenet {

enum class Method { sgd, momentum };

Method parse_method(std::string_view text);
std::string_view method_name(Method method);

struct OptimizerConfig {
  double tau = 0.01;
  double tau1 = 0.0;
  /// Stop once the largest per-family parameter change drops below this.
  /// Zero disables the rule.
  double eta_stop = 0.0;
  int max_epochs = 1;
  int batch_size = 1;
  std::uint64_t seed = 0;
  Method method = Method::sgd;
  AdjointScheme scheme = AdjointScheme::exact;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without a validation set
  std::optional<double> train_acc;
  std::optional<double> val_acc;
  /// max of the α, β, γ Frobenius changes over this epoch
  double param_change = 0.0;
};

struct TrainState {
  ParamPath params;
  ParamPath prev_params;
  int epoch = 0;
  std::vector<EpochMetrics> history;
  bool converged = false;
};

/// Shuffled disjoint cover of 0..K-1 in chunks of batch_size (last may be short).
std::vector<std::vector<std::size_t>> partition_batches(std::size_t count, std::size_t batch_size,
                                                        Xoshiro256& rng);

ParamPath sgd_step(const ParamPath& params, const Gradients& grads, double tau);

/// params - τ·grads + τ₁·(params - prev_params).
ParamPath momentum_step(const ParamPath& params, const ParamPath& prev_params,
                        const Gradients& grads, double tau, double tau1);

/// Halved loss and (for classification tasks) accuracy of the whole set.
struct SetMetrics {
  double loss = 0.0;
  std::optional<double> acc;
};
SetMetrics evaluate_set(const ODENetSpec& spec, const ParamPath& params, const Dataset& data);

using EpochCallback = std::function<void(const EpochMetrics&, const TrainState&)>;

/// Algorithm-1 epoch loop. `val` may be empty (no validation metrics).
/// Divergence is rethrown with epoch and batch context prepended.
TrainState train(const ODENetSpec& spec, const ParamPath& init, const Dataset& data,
                 const Dataset& val, const OptimizerConfig& cfg,
                 const EpochCallback& on_epoch = {});

/// Writes `epoch,train_loss,val_loss,train_acc,val_acc`, flushing every row.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const EpochMetrics& row);

 private:
  std::ofstream out_;
  std::string path_;
};

std::string format_number(double value);

}  // namespace odenet
