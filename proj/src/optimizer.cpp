#include "odenet/optimizer.hpp"

#include "odenet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace odenet {
namespace {

void require_same(const PathValues& a, const PathValues& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": parameter/gradient shape mismatch");
}

double family_change(const ParamPath& now, const ParamPath& before) {
  ParamPath diff = now;
  diff.add_scaled(before, -1.0);
  return std::max({diff.alpha_norm(), diff.beta_norm(), diff.gamma_norm()});
}

Mat gather(const Mat& m, const std::vector<std::size_t>& cols) {
  Mat out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(cols[i]));
  }
  return out;
}

}  // namespace

Method parse_method(std::string_view text) {
  if (text == "sgd") return Method::sgd;
  if (text == "momentum") return Method::momentum;
  throw FormatError("unknown method '" + std::string(text) + "' (expected sgd|momentum)");
}

std::string_view method_name(Method method) {
  return method == Method::sgd ? "sgd" : "momentum";
}

void OptimizerConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
  if (!(tau1 >= 0.0 && tau1 < 1.0)) throw std::invalid_argument("tau1 must lie in [0, 1)");
  if (!(eta_stop >= 0.0)) throw std::invalid_argument("eta_stop must be non-negative");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

std::vector<std::vector<std::size_t>> partition_batches(std::size_t count, std::size_t batch_size,
                                                        Xoshiro256& rng) {
  if (batch_size == 0) throw ShapeError("partition_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t stop = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

ParamPath sgd_step(const ParamPath& params, const Gradients& grads, double tau) {
  require_same(params, grads, "sgd_step");
  ParamPath out = params;
  out.add_scaled(grads, -tau);
  return out;
}

ParamPath momentum_step(const ParamPath& params, const ParamPath& prev_params,
                        const Gradients& grads, double tau, double tau1) {
  require_same(params, grads, "momentum_step");
  require_same(params, prev_params, "momentum_step");
  ParamPath out = params;
  out.add_scaled(grads, -tau);
  if (tau1 != 0.0) {
    out.add_scaled(params, tau1);
    out.add_scaled(prev_params, -tau1);
  }
  return out;
}

SetMetrics evaluate_set(const ODENetSpec& spec, const ParamPath& params, const Dataset& data) {
  SetMetrics m;
  const Mat pred = predict_batch(spec, params, data.inputs);
  m.loss = minibatch_loss(pred, data.targets);
  if (data.task != Task::regression) m.acc = accuracy(pred, data.targets, data.task);
  return m;
}

TrainState train(const ODENetSpec& spec, const ParamPath& init, const Dataset& data,
                 const Dataset& val, const OptimizerConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require_shape(spec, init, "train init");
  if (data.size() == 0) throw ShapeError("train: empty training set");
  if (data.n() != spec.n() || data.m() != spec.m()) {
    throw ShapeError("train: dataset dimensions (" + std::to_string(data.n()) + ", " +
                     std::to_string(data.m()) + ") do not match spec (n=" +
                     std::to_string(spec.n()) + ", m=" + std::to_string(spec.m()) + ")");
  }
  const bool has_val = val.size() > 0;
  if (has_val && (val.n() != spec.n() || val.m() != spec.m())) {
    throw ShapeError("train: validation set dimensions do not match spec");
  }

  Xoshiro256 rng(cfg.seed);
  TrainState state;
  state.params = init;
  state.prev_params = init;
  const double tau1 = cfg.method == Method::momentum ? cfg.tau1 : 0.0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const ParamPath epoch_start = state.params;
    const auto batches = partition_batches(static_cast<std::size_t>(data.size()),
                                           static_cast<std::size_t>(cfg.batch_size), rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Mat inputs = gather(data.inputs, batches[b]);
      const Mat targets = gather(data.targets, batches[b]);
      try {
        const MinibatchResult r = minibatch_gradient(spec, state.params, inputs, targets,
                                                     cfg.scheme);
        ParamPath next = momentum_step(state.params, state.prev_params, r.grads, cfg.tau, tau1);
        if (!next.all_finite()) {
          throw DivergenceError("parameters became non-finite", -1);
        }
        state.prev_params = std::move(state.params);
        state.params = std::move(next);
      } catch (const DivergenceError& e) {
        std::string where = "epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1) + "/" + std::to_string(batches.size());
        std::string what = e.what();
        const std::string column = "batch column ";
        if (const auto pos = what.find(column); pos != std::string::npos) {
          const std::size_t col = std::stoul(what.substr(pos + column.size()));
          if (col < batches[b].size()) where += ", sample " + std::to_string(batches[b][col]);
        }
        throw DivergenceError(where + ": " + what, e.step());
      }
    }
    state.epoch = epoch;

    EpochMetrics row;
    row.epoch = epoch;
    try {
      const SetMetrics tm = evaluate_set(spec, state.params, data);
      row.train_loss = tm.loss;
      row.train_acc = tm.acc;
      row.val_loss = std::numeric_limits<double>::quiet_NaN();
      if (has_val) {
        const SetMetrics vm = evaluate_set(spec, state.params, val);
        row.val_loss = vm.loss;
        row.val_acc = vm.acc;
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError("epoch " + std::to_string(epoch) + " metrics: " + e.what(), e.step());
    }
    row.param_change = family_change(state.params, epoch_start);
    state.history.push_back(row);
    if (on_epoch) on_epoch(row, state);
    if (row.param_change < cfg.eta_stop) {
      state.converged = true;
      break;
    }
  }
  return state;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path), path_(path) {
  if (!out_) throw FormatError("cannot write metrics file '" + path + "'");
  out_ << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  out_.flush();
}

void MetricsWriter::write(const EpochMetrics& row) {
  out_ << row.epoch << ',' << format_number(row.train_loss) << ',';
  if (!std::isnan(row.val_loss)) out_ << format_number(row.val_loss);
  out_ << ',';
  if (row.train_acc) out_ << format_number(*row.train_acc);
  out_ << ',';
  if (row.val_acc) out_ << format_number(*row.val_acc);
  out_ << '\n';
  out_.flush();
  if (!out_) throw FormatError("write to '" + path_ + "' failed");
}

}  // namespace odenet
