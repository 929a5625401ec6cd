#include "odenet/experiment.hpp"

#include "odenet/errors.hpp"
#include "odenet/rng.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace odenet {
namespace {

Task default_task(const std::string& dataset) {
  if (dataset == "sin") return Task::regression;
  if (dataset == "circle") return Task::binary;
  if (dataset == "mnist") return Task::multiclass;
  return Task::regression;
}

void require_dims(const Dataset& d, const Config& cfg, const char* which) {
  const long n = cfg.require_int("model.n");
  const long m = cfg.require_int("model.m");
  if (d.n() != n || d.m() != m) {
    throw FormatError(cfg.where("data.dataset") + ": " + which + " data has n=" +
                      std::to_string(d.n()) + ", m=" + std::to_string(d.m()) +
                      " but [model] declares n=" + std::to_string(n) + ", m=" + std::to_string(m));
  }
}

}  // namespace

Mat random_orthogonal(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  if (m < 1 || n < 1 || m > n) throw ShapeError("random_orthogonal: need 1 <= m <= n");
  Xoshiro256 rng(seed);
  Mat a(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < i; ++k) a.row(i) -= a.row(i).dot(a.row(k)) * a.row(k);
    }
    const double norm = a.row(i).norm();
    if (!(norm > 1e-12)) throw RankError("random_orthogonal: degenerate draw");
    a.row(i) /= norm;
  }
  return a;
}

Mat parse_matrix_spec(const std::string& text, Eigen::Index m, Eigen::Index n) {
  const std::string prefix = "random_orthogonal:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string s = text.substr(prefix.size());
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw FormatError("bad random_orthogonal seed '" + s + "'");
    }
    return random_orthogonal(m, n, seed);
  }
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(cleaned);
  Mat a(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(in >> a(i, j))) {
        throw FormatError("matrix needs " + std::to_string(m * n) + " numbers (m=" +
                          std::to_string(m) + ", n=" + std::to_string(n) + ")");
      }
    }
  }
  std::string extra;
  if (in >> extra) throw FormatError("matrix has more than " + std::to_string(m * n) + " numbers");
  return a;
}

Mat load_matrix_file(const std::string& path, Eigen::Index m, Eigen::Index n) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open matrix file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_matrix_spec(buf.str(), m, n);
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

ModelSetup model_from_config(const Config& cfg) {
  const long n = cfg.require_int("model.n");
  const long m = cfg.require_int("model.m");
  const long steps = cfg.require_int("model.L");
  if (n < 1 || m < 1) throw FormatError(cfg.where("model.n") + ": n and m must be positive");
  if (m > n) throw FormatError(cfg.where("model.m") + ": m must not exceed n");
  if (steps < 1) throw FormatError(cfg.where("model.L") + ": L must be >= 1");
  const double horizon = cfg.get_double("model.T", 1.0);
  Activation act;
  try {
    act = Activation::parse(cfg.get_string("model.activation", "tanh"));
  } catch (const std::exception& e) {
    throw FormatError(cfg.where("model.activation") + ": " + e.what());
  }
  Mat a;
  try {
    a = parse_matrix_spec(cfg.get_string("model.A", "random_orthogonal:0"), m, n);
  } catch (const std::exception& e) {
    throw FormatError(cfg.where("model.A") + ": " + e.what());
  }
  ODENetSpec spec(std::move(a), horizon, static_cast<int>(steps), act);
  const std::string preset = cfg.get_string("train.init", "zeros");
  ParamPath init;
  try {
    init = initial_params(spec, preset);
  } catch (const std::exception& e) {
    throw FormatError(cfg.where("train.init") + ": " + e.what());
  }
  return {std::move(spec), std::move(init)};
}

OptimizerConfig optimizer_from_config(const Config& cfg) {
  OptimizerConfig o;
  o.tau = cfg.require_double("train.tau");
  o.max_epochs = static_cast<int>(cfg.require_int("train.max_epochs"));
  o.batch_size = static_cast<int>(cfg.require_int("train.batch_size"));
  o.tau1 = cfg.get_double("train.tau1", 0.0);
  o.eta_stop = cfg.get_double("train.eta_stop", 0.0);
  o.seed = cfg.get_u64("train.seed", 0);
  try {
    o.method = parse_method(cfg.get_string("train.method", "sgd"));
  } catch (const std::exception& e) {
    throw FormatError(cfg.where("train.method") + ": " + e.what());
  }
  const std::string scheme = cfg.get_string("train.adjoint", "exact");
  if (scheme == "exact") {
    o.scheme = AdjointScheme::exact;
  } else if (scheme == "euler") {
    o.scheme = AdjointScheme::euler;
  } else {
    throw FormatError(cfg.where("train.adjoint") + ": adjoint must be exact or euler");
  }
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(cfg.where("train.tau") + ": " + e.what());
  }
  return o;
}

DataSetup data_from_config(const Config& cfg) {
  const std::string dataset = cfg.require("data.dataset");
  Task task = default_task(dataset);
  if (auto t = cfg.get("data.task")) {
    try {
      task = parse_task(*t);
    } catch (const std::exception& e) {
      throw FormatError(cfg.where("data.task") + ": " + e.what());
    }
  }
  const std::uint64_t seed = cfg.get_u64("data.seed", 0);
  DataSetup out;
  if (dataset == "sin") {
    out.train = gen_sinusoid(cfg.get_int("data.count", 1000));
    out.val = gen_sinusoid(cfg.get_int("data.val_count", 3333));
  } else if (dataset == "circle") {
    out.train = gen_circle(cfg.get_int("data.count", 10000), seed);
    out.val = gen_circle(cfg.get_int("data.val_count", 2500), seed + 1);
  } else {
    Dataset pool;
    if (dataset == "mnist") {
      const std::string dir = cfg.resolve(cfg.get_string("data.mnist_dir", "data/mnist"));
      std::optional<std::size_t> limit;
      if (cfg.has("data.limit")) limit = static_cast<std::size_t>(cfg.require_int("data.limit"));
      pool = load_mnist_idx(dir + "/train-images-idx3-ubyte.gz",
                            dir + "/train-labels-idx1-ubyte.gz", limit);
    } else if (dataset.rfind("csv:", 0) == 0) {
      pool = load_csv_dataset(cfg.resolve(dataset.substr(4)), task);
      if (cfg.has("data.limit")) {
        const auto limit = static_cast<Eigen::Index>(cfg.require_int("data.limit"));
        if (limit < pool.size()) {
          std::vector<std::size_t> head(static_cast<std::size_t>(limit));
          for (std::size_t i = 0; i < head.size(); ++i) head[i] = i;
          pool = pool.subset(head);
        }
      }
    } else {
      throw FormatError(cfg.where("data.dataset") + ": unknown dataset '" + dataset +
                        "' (expected sin|circle|mnist|csv:PATH)");
    }
    pool.task = task;
    pool.validate();
    if (auto val_csv = cfg.get("data.val_csv")) {
      out.train = std::move(pool);
      out.val = load_csv_dataset(cfg.resolve(*val_csv), task);
    } else {
      auto [train, val] = split(pool, cfg.get_double("data.split_fraction", 0.8), seed);
      out.train = std::move(train);
      out.val = std::move(val);
    }
  }
  out.train.task = task;
  out.val.task = task;
  require_dims(out.train, cfg, "training");
  require_dims(out.val, cfg, "validation");
  return out;
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "model.n",          "model.m",          "model.T",           "model.L",
      "model.activation", "model.A",          "train.tau",         "train.tau1",
      "train.method",     "train.batch_size", "train.max_epochs",  "train.eta_stop",
      "train.seed",       "train.init",       "train.adjoint",     "data.task",
      "data.dataset",     "data.split_fraction", "data.limit",     "data.count",
      "data.val_count",   "data.seed",        "data.mnist_dir",    "data.val_csv",
      "gradcheck.samples", "gradcheck.seed",  "gradcheck.scale",   "gradcheck.step",
      "gradcheck.rel_tol", "gradcheck.abs_tol", "evaluate.k",
  };
  return keys;
}

}  // namespace odenet
