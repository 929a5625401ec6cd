#include "odenet/checkpoint.hpp"
#include "odenet/config.hpp"
#include "odenet/errors.hpp"
#include "odenet/experiment.hpp"
#include "odenet/gradcheck.hpp"
#include "odenet/knn.hpp"
#include "odenet/optimizer.hpp"
#include "odenet/rng.hpp"
#include "odenet/uap.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace odenet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitDiverged = 2;
constexpr int kConstructProbes = 100;

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

Config load_config(const std::string& path) {
  Config cfg = Config::load(path);
  cfg.reject_unknown(known_config_keys());
  return cfg;
}

int cmd_train(const std::string& config_path, std::string checkpoint, std::string metrics,
              bool quiet) {
  const Config cfg = load_config(config_path);
  ModelSetup model = model_from_config(cfg);
  const OptimizerConfig opt = optimizer_from_config(cfg);
  const DataSetup data = data_from_config(cfg);
  if (checkpoint.empty()) checkpoint = stem_of(config_path) + ".ckpt";
  if (metrics.empty()) metrics = stem_of(config_path) + "_metrics.csv";

  MetricsWriter writer(metrics);
  const auto on_epoch = [&](const EpochMetrics& row, const TrainState&) {
    writer.write(row);
    if (!quiet) {
      std::fprintf(stderr, "epoch %d  train_loss %.6g  val_loss %.6g", row.epoch, row.train_loss,
                   row.val_loss);
      if (row.val_acc) std::fprintf(stderr, "  val_acc %.4f", *row.val_acc);
      std::fprintf(stderr, "\n");
    }
  };
  const TrainState state = train(model.spec, model.init, data.train, data.val, opt, on_epoch);
  save_checkpoint(checkpoint, model.spec, state.params);

  const EpochMetrics& last = state.history.back();
  std::printf("epochs %d%s\n", state.epoch, state.converged ? " (stopping rule met)" : "");
  std::printf("train_loss %.17g\nval_loss %.17g\n", last.train_loss, last.val_loss);
  if (last.train_acc) std::printf("train_acc %.17g\n", *last.train_acc);
  if (last.val_acc) std::printf("val_acc %.17g\n", *last.val_acc);
  std::printf("checkpoint %s\nmetrics %s\n", checkpoint.c_str(), metrics.c_str());
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& input_csv,
                const std::string& output_csv, const std::string& task_text) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Mat inputs = load_csv_inputs(input_csv);
  if (inputs.rows() != ckpt.A.cols()) {
    throw ShapeError("'" + input_csv + "' has " + std::to_string(inputs.rows()) +
                     " input columns but the checkpoint expects n=" +
                     std::to_string(ckpt.A.cols()));
  }
  Mat pred;
  if (ckpt.kind == ModelKind::odenet) {
    const auto [spec, params] = ckpt.odenet();
    pred = predict_batch(spec, params, inputs);
  } else {
    const ResNetParams params = ckpt.resnet();
    pred.resize(params.m(), inputs.cols());
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) pred.col(k) = resnet_predict(params, inputs.col(k));
  }
  const Task task = parse_task(task_text);
  if (task == Task::binary && pred.rows() != 1) throw ShapeError("binary task needs m = 1");

  std::ofstream out(output_csv);
  if (!out) throw FormatError("cannot write '" + output_csv + "'");
  for (Eigen::Index j = 0; j < pred.rows(); ++j) out << (j ? "," : "") << 'y' << j;
  if (task != Task::regression) out << ",label";
  out << '\n';
  for (Eigen::Index k = 0; k < pred.cols(); ++k) {
    for (Eigen::Index j = 0; j < pred.rows(); ++j) out << (j ? "," : "") << format_number(pred(j, k));
    if (task == Task::binary) out << ',' << (pred(0, k) >= 0.5 ? 1 : 0);
    if (task == Task::multiclass) out << ',' << argmax(pred.col(k));
    out << '\n';
  }
  if (!out) throw FormatError("write to '" + output_csv + "' failed");
  return kExitOk;
}

int cmd_gradcheck(const std::string& config_path, bool corrupt_gamma) {
  const Config cfg = load_config(config_path);
  const ModelSetup model = model_from_config(cfg);
  const ODENetSpec& spec = model.spec;
  const long samples = cfg.get_int("gradcheck.samples", 5);
  if (samples < 1) throw FormatError(cfg.where("gradcheck.samples") + ": samples must be >= 1");
  const double scale = cfg.get_double("gradcheck.scale", 0.5);

  Xoshiro256 rng(cfg.get_u64("gradcheck.seed", 0));
  ParamPath params = ParamPath::zeros(spec.n(), spec.m(), spec.L());
  for (std::size_t k = 0; k < params.entry_count(); ++k) params.entry(k) = rng.uniform(-scale, scale);
  Mat inputs(spec.n(), samples);
  Mat targets(spec.m(), samples);
  for (Eigen::Index k = 0; k < samples; ++k) {
    for (Eigen::Index i = 0; i < spec.n(); ++i) inputs(i, k) = rng.uniform(-1.0, 1.0);
    for (Eigen::Index j = 0; j < spec.m(); ++j) targets(j, k) = rng.uniform(-1.0, 1.0);
  }

  GradcheckOptions options;
  options.step = cfg.get_double("gradcheck.step", kFdStep);
  options.rel_tol = cfg.get_double("gradcheck.rel_tol", 1e-4);
  options.abs_tol = cfg.get_double("gradcheck.abs_tol", 1e-7);
  options.corrupt_gamma = corrupt_gamma;
  const GradcheckReport report = gradcheck_odenet(spec, params, inputs, targets, options);
  std::printf("gradcheck activation=%s n=%ld m=%ld L=%d K=%ld\n", spec.activation().name().c_str(),
              static_cast<long>(spec.n()), static_cast<long>(spec.m()), spec.L(), samples);
  std::fputs(report.text().c_str(), stdout);
  return report.passed() ? kExitOk : kExitUser;
}

int cmd_construct(const std::string& shallow_path, const std::string& a_path,
                  const std::string& out_path) {
  const ShallowNet net = load_shallow(shallow_path);
  const Mat a = load_matrix_file(a_path, net.m, net.n);
  CompileReport report;
  const ResNetParams params = compile_resnet(net, a, &report);
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  Xoshiro256 rng(0);
  double worst = 0.0;
  double worst_scaled = 0.0;
  for (int p = 0; p < kConstructProbes; ++p) {
    Vec xi(net.n);
    for (Eigen::Index i = 0; i < net.n; ++i) xi(i) = rng.uniform(-1.0, 1.0);
    const Vec g = net.eval(xi);
    const double err = (resnet_predict(params, xi) - g).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    worst_scaled = std::max(worst_scaled, err / (1.0 + g.cwiseAbs().maxCoeff()));
  }
  save_checkpoint(out_path, params);
  std::printf("resnet depth %d (from %zu shallow units)\n", params.L(), net.units.size());
  std::printf("max reproduction error over %d probes: %.3e (relative %.3e)\n", kConstructProbes,
              worst, worst_scaled);
  std::printf("max condition estimate: %.3e\n", report.max_condition);
  return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& method, int k,
                 const std::string& checkpoint) {
  const Config cfg = load_config(config_path);
  const DataSetup data = data_from_config(cfg);
  if (method == "knn") {
    const KnnEvaluation e = knn_evaluate(data.train, data.val, k);
    std::printf("method knn k=%d\nval_loss %.17g\nval_acc %.17g\n", k, e.loss, e.accuracy);
    return kExitOk;
  }
  if (method == "odenet") {
    if (checkpoint.empty()) throw FormatError("evaluate --method odenet needs --checkpoint");
    const auto [spec, params] = load_checkpoint(checkpoint).odenet();
    const SetMetrics tm = evaluate_set(spec, params, data.train);
    const SetMetrics vm = evaluate_set(spec, params, data.val);
    std::printf("method odenet\ntrain_loss %.17g\nval_loss %.17g\n", tm.loss, vm.loss);
    if (tm.acc) std::printf("train_acc %.17g\n", *tm.acc);
    if (vm.acc) std::printf("val_acc %.17g\n", *vm.acc);
    return kExitOk;
  }
  throw FormatError("unknown evaluation method '" + method + "' (expected knn|odenet)");
}

int cmd_gen_data(const std::string& kind, long count, std::uint64_t seed, const std::string& out) {
  if (count < 1) throw FormatError("--count must be >= 1");
  Dataset d;
  if (kind == "sin") {
    d = gen_sinusoid(count);
  } else if (kind == "circle") {
    d = gen_circle(count, seed);
  } else {
    throw FormatError("unknown generator '" + kind + "' (expected sin|circle)");
  }
  save_csv_dataset(out, d);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ODENet / ResNet training and verification toolkit"};
  app.require_subcommand(1);

  std::string config, checkpoint, metrics, input, output, task = "regression";
  std::string shallow, a_file, method = "knn", kind;
  bool quiet = false;
  bool corrupt = false;
  int k = 3;
  long count = 1000;
  std::uint64_t seed = 0;

  auto* train_cmd = app.add_subcommand("train", "run SGD / momentum training from a config");
  train_cmd->add_option("config", config, "experiment config")->required();
  train_cmd->add_option("--checkpoint", checkpoint, "output checkpoint (default <config>.ckpt)");
  train_cmd->add_option("--metrics", metrics, "metrics CSV (default <config>_metrics.csv)");
  train_cmd->add_flag("--quiet", quiet, "no per-epoch progress on stderr");

  auto* predict_cmd = app.add_subcommand("predict", "evaluate a checkpoint on CSV inputs");
  predict_cmd->add_option("checkpoint", checkpoint)->required();
  predict_cmd->add_option("input", input, "CSV with x0..x{n-1} columns")->required();
  predict_cmd->add_option("output", output)->required();
  predict_cmd->add_option("--task", task, "regression|binary|multiclass");

  auto* grad_cmd = app.add_subcommand("gradcheck", "adjoint gradients vs finite differences");
  grad_cmd->add_option("config", config)->required();
  grad_cmd->add_flag("--corrupt-gamma", corrupt, "negate G[gamma] (sabotage check)");

  auto* construct_cmd = app.add_subcommand("construct", "compile a shallow net to a ResNet");
  construct_cmd->add_option("shallow", shallow)->required();
  construct_cmd->add_option("A", a_file, "file with m*n numbers")->required();
  construct_cmd->add_option("output", output)->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "baseline or checkpoint evaluation");
  eval_cmd->add_option("config", config)->required();
  eval_cmd->add_option("--method", method, "knn|odenet");
  eval_cmd->add_option("--k", k, "neighbours for knn");
  eval_cmd->add_option("--checkpoint", checkpoint);

  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  gen_cmd->add_option("kind", kind, "sin|circle")->required();
  gen_cmd->add_option("output", output)->required();
  gen_cmd->add_option("--count", count);
  gen_cmd->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*train_cmd) return cmd_train(config, checkpoint, metrics, quiet);
    if (*predict_cmd) return cmd_predict(checkpoint, input, output, task);
    if (*grad_cmd) return cmd_gradcheck(config, corrupt);
    if (*construct_cmd) return cmd_construct(shallow, a_file, output);
    if (*eval_cmd) return cmd_evaluate(config, method, k, checkpoint);
    if (*gen_cmd) return cmd_gen_data(kind, count, seed, output);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: divergence: %s\n", e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUser;
  }
  return kExitUser;
}
