// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (all ten by default)

#include "odenet/checkpoint.hpp"
#include "odenet/config.hpp"
#include "odenet/experiment.hpp"
#include "odenet/forward.hpp"
#include "odenet/gradcheck.hpp"
#include "odenet/knn.hpp"
#include "odenet/optimizer.hpp"
#include "odenet/resnet.hpp"
#include "odenet/uap.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

using namespace odenet;

namespace {

const std::filesystem::path kSource = ODENET_SOURCE_DIR;
const std::string kCli = ODENET_CLI;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

constexpr double kRel = 1e-4;
constexpr double kAbs = 1e-7;

bool within(double a, double n) { return std::abs(a - n) <= kAbs + kRel * std::max(std::abs(a), std::abs(n)); }

Outcome adjoint_gradients() {
  Xoshiro256 rng(2024);
  int passed = 0;
  double worst = 0.0;
  std::size_t entries = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + rng.below(4), m = 1 + rng.below(std::min<std::uint64_t>(3, n));
    const int steps = 1 + static_cast<int>(rng.below(20));
    const Eigen::Index samples = 1 + rng.below(5);
    const ODENetSpec spec(testutil::random_full_rank(rng, m, n), 0.5 + 1.5 * rng.uniform(), steps,
                          Activation::tanh());
    const ParamPath p = testutil::random_params(rng, n, m, steps, 0.5);
    const Mat x = testutil::random_mat(rng, n, samples), f = testutil::random_mat(rng, m, samples);
    const GradcheckReport r = gradcheck_odenet(spec, p, x, f);
    passed += r.passed() && r.skipped == 0;
    worst = std::max(worst, r.worst_ratio);
    entries += r.checked;
  }
  return {passed == 20, fmt("%d/20 instances, %zu entries, worst error/tolerance %.3g", passed, entries, worst)};
}

double stacked_loss(const ResNetParams& p, const std::vector<Vec>& xs, const std::vector<Vec>& fs) {
  double sum = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) sum += (resnet_predict(p, xs[k]) - fs[k]).squaredNorm();
  return sum / (2.0 * static_cast<double>(xs.size()));
}

Outcome resnet_gradients() {
  Xoshiro256 rng(2025);
  int passed = 0;
  std::size_t entries = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + rng.below(4), m = 1 + rng.below(std::min<std::uint64_t>(3, n));
    const int depth = 1 + static_cast<int>(rng.below(20));
    ResNetParams p = ResNetParams::zeros(testutil::random_full_rank(rng, m, n), Activation::tanh(), depth);
    for (int l = 0; l < depth; ++l) {
      p.alpha[l] = testutil::random_vec(rng, m, 0.5);
      p.beta[l] = testutil::random_mat(rng, n, n, 0.5 / std::sqrt(static_cast<double>(depth)));
      p.gamma[l] = testutil::random_vec(rng, n, 0.5);
    }
    std::vector<Vec> xs, fs;
    for (Eigen::Index k = 0, samples = 1 + rng.below(5); k < samples; ++k) {
      xs.push_back(testutil::random_vec(rng, n));
      fs.push_back(testutil::random_vec(rng, m));
    }
    const auto grads = resnet_backprop_batch(paper_resnet_problem(p), xs, fs);
    auto omega = pack_resnet_omega(p);
    ResNetParams work = p;
    bool ok = true;
    for (std::size_t l = 0; l < omega.size(); ++l) {
      for (Eigen::Index r = 0; r < omega[l].size(); ++r, ++entries) {
        const double orig = omega[l](r);
        omega[l](r) = orig + kFdStep;
        unpack_resnet_omega(omega, work);
        const double plus = stacked_loss(work, xs, fs);
        omega[l](r) = orig - kFdStep;
        unpack_resnet_omega(omega, work);
        const double minus = stacked_loss(work, xs, fs);
        omega[l](r) = orig;
        ok = ok && within(grads[l](r), (plus - minus) / (2.0 * kFdStep));
      }
    }
    passed += ok;
  }
  return {passed == 20, fmt("%d/20 instances, %zu entries", passed, entries)};
}

Outcome construction_exactness() {
  Xoshiro256 rng(2026);
  const Activation acts[] = {Activation::tanh(), Activation::sigmoid(), Activation::relu()};
  int passed = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + rng.below(4), m = 1 + rng.below(std::min<std::uint64_t>(3, n));
    ShallowNet net;
    net.n = n;
    net.m = m;
    net.activation = acts[trial % 3];
    for (int l = 0, units = 1 + static_cast<int>(rng.below(6)); l < units; ++l) {
      net.units.push_back({testutil::random_vec(rng, m), testutil::random_mat(rng, m, n), testutil::random_vec(rng, m)});
    }
    Mat a = testutil::random_full_rank(rng, m, n);
    if (m == n && determinant(a) < 0) a.row(0) *= -1.0;
    if (n == 1) {
      for (auto& u : net.units) u.C(0, 0) = std::abs(u.C(0, 0));
    }
    const ResNetParams r = compile_resnet(net, a);
    bool ok = true;
    for (int k = 0; k < 100; ++k) {
      const Vec xi = testutil::random_vec(rng, n, 2.0);
      const Vec g = net.eval(xi);
      const double err = (resnet_predict(r, xi) - g).cwiseAbs().maxCoeff() / (1.0 + g.norm());
      worst = std::max(worst, err);
      ok = ok && err <= 1e-10;
    }
    passed += ok;
  }
  return {passed == 50, fmt("%d/50 nets, worst error/(1+|G|) %.3g", passed, worst)};
}

Outcome lemma_postconditions() {
  Xoshiro256 rng(2027);
  int passed = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + rng.below(6), m = 1 + rng.below(static_cast<std::uint64_t>(n));
    const Mat a = testutil::random_full_rank(rng, m, n);
    Mat c = testutil::random_full_rank(rng, m, n);
    if (m == n && (determinant(a) > 0) != (determinant(c) > 0)) c.row(0) *= -1.0;
    const Mat p = factor_through_A(a, c);
    const double residual = (a * p - c).norm() / c.norm();
    worst = std::max(worst, residual);
    passed += determinant(p) > 0.0 && residual <= 1e-10;
  }
  return {passed == 200, fmt("%d/200 pairs, worst |AP-C|/|C| %.3g", passed, worst)};
}

Outcome euler_order() {
  Xoshiro256 rng(2028);
  const Mat a = testutil::random_full_rank(rng, 2, 3);
  const Mat b0 = testutil::random_mat(rng, 3, 3, 0.5), b1 = testutil::random_mat(rng, 3, 3, 0.5);
  const Vec g0 = testutil::random_vec(rng, 3), a0 = testutil::random_vec(rng, 2), a1 = testutil::random_vec(rng, 2);
  const Vec xi = testutil::random_vec(rng, 3);
  const double horizon = 2.0;
  auto solve = [&](int steps) {
    const ODENetSpec spec(a, horizon, steps, Activation::tanh());
    ParamPath p = ParamPath::zeros(3, 2, steps);
    for (int l = 0; l <= steps; ++l) {
      const double t = l * spec.h();
      p.beta[l] = b0 + std::sin(t) * b1;
      p.gamma[l] = std::cos(t) * g0;
      p.alpha[l] = a0 + t * a1;
    }
    return predict(spec, p, xi);
  };
  std::vector<double> gaps;
  for (int steps : {16, 32, 64, 128}) gaps.push_back((solve(2 * steps) - solve(steps)).norm());
  bool ok = true;
  std::string ratios;
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    const double ratio = gaps[k] / gaps[k - 1];
    ok = ok && ratio >= 0.35 && ratio <= 0.65;
    ratios += fmt(" %.4f", ratio);
  }
  return {ok, "gap ratios" + ratios};
}

struct Experiment {
  ModelSetup model;
  OptimizerConfig opt;
  DataSetup data;
};

Experiment experiment(const std::string& name) {
  const Config cfg = Config::load((kSource / "configs" / name).string());
  cfg.reject_unknown(known_config_keys());
  return {model_from_config(cfg), optimizer_from_config(cfg), data_from_config(cfg)};
}

Outcome sinusoid() {
  const Experiment e = experiment("sin.cfg");
  const TrainState s = train(e.model.spec, e.model.init, e.data.train, e.data.val, e.opt);
  const double first = s.history.front().train_loss, last = s.history.back().train_loss;
  return {s.epoch <= 2000 && last * 10.0 <= first,
          fmt("%d epochs, train loss %.5g -> %.5g (%.1fx)", s.epoch, first, last, first / last)};
}

Outcome circle() {
  const Experiment e = experiment("circle.cfg");
  const TrainState s = train(e.model.spec, e.model.init, e.data.train, e.data.val, e.opt);
  const double acc = s.history.back().val_acc.value_or(0.0);
  return {s.epoch <= 2000 && e.data.train.size() == 10000 && e.data.val.size() == 2500 && acc >= 0.90,
          fmt("%d epochs, K=%ld/%ld, validation accuracy %.4f, loss %.5f", s.epoch,
              static_cast<long>(e.data.train.size()), static_cast<long>(e.data.val.size()), acc,
              s.history.back().val_loss)};
}

Outcome knn_baseline() {
  const Experiment e = experiment("circle.cfg");
  const KnnEvaluation r = knn_evaluate(e.data.train, e.data.val, 3);
  return {r.accuracy >= 0.95, fmt("k=3 validation accuracy %.4f, loss %.5f", r.accuracy, r.loss)};
}

Outcome mnist() {
  const Experiment e = experiment("mnist.cfg");
  const TrainState s = train(e.model.spec, e.model.init, e.data.train, e.data.val, e.opt);
  const double acc = s.history.back().val_acc.value_or(0.0);
  return {s.epoch <= 200 && e.data.train.size() == 5000 && e.data.val.size() == 1000 && acc >= 0.80,
          fmt("%d epochs, K=%ld/%ld, validation accuracy %.4f, loss %.5f", s.epoch,
              static_cast<long>(e.data.train.size()), static_cast<long>(e.data.val.size()), acc,
              s.history.back().val_loss)};
}

Outcome determinism() {
  const auto dir = testutil::temp_dir("acceptance_rerun");
  std::string cfg = testutil::read_file(kSource / "configs" / "circle.cfg");
  for (auto [from, to] : {std::pair<std::string, std::string>{"max_epochs = 2000", "max_epochs = 5"},
                          {"count = 10000", "count = 1000"}}) {
    cfg.replace(cfg.find(from), from.size(), to);
  }
  testutil::write_file(dir / "c.cfg", cfg);
  const auto c = kSource / "configs" / "construct";
  std::vector<std::string> compared;
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    const std::filesystem::path out = dir / run;
    std::filesystem::create_directories(out);
    const std::string q = "'" + kCli + "' ";
    const std::vector<std::string> commands = {
        q + "train --quiet '" + (dir / "c.cfg").string() + "' --checkpoint '" + (out / "c.ckpt").string() +
            "' --metrics '" + (out / "m.csv").string() + "'",
        q + "gen-data circle '" + (out / "pts.csv").string() + "' --count 200 --seed 3",
        q + "predict '" + (out / "c.ckpt").string() + "' '" + (out / "pts.csv").string() + "' '" +
            (out / "pred.csv").string() + "' --task binary",
        q + "construct '" + (c / "three_units.shallow").string() + "' '" + (c / "A_2x3.txt").string() + "' '" +
            (out / "r.ckpt").string() + "'",
    };
    for (const auto& cmd : commands) ok = ok && testutil::run(cmd).code == 0;
  }
  for (const char* file : {"c.ckpt", "m.csv", "pts.csv", "pred.csv", "r.ckpt"}) {
    const std::string a = testutil::read_file(dir / "a" / file), b = testutil::read_file(dir / "b" / file);
    ok = ok && !a.empty() && a == b;
    compared.push_back(file);
  }
  std::string list;
  for (const auto& f : compared) list += " " + f;
  return {ok, "byte-identical reruns:" + list};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"adjoint gradients match central differences", adjoint_gradients},
      {"ResNet backprop matches central differences", resnet_gradients},
      {"shallow net compiles to an exact ResNet", construction_exactness},
      {"factorisation postconditions det P > 0, AP = C", lemma_postconditions},
      {"explicit Euler converges at first order", euler_order},
      {"sinusoid training loss drops tenfold", sinusoid},
      {"circle classification accuracy >= 0.90", circle},
      {"k-NN circle accuracy >= 0.95", knn_baseline},
      {"MNIST subset accuracy >= 0.80", mnist},
      {"CLI reruns are byte-identical", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
