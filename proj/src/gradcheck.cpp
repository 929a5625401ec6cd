#include "odenet/gradcheck.hpp"

#include "odenet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace odenet {

Gradients fd_gradient(const PathLoss& loss, const ParamPath& params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  ParamPath work = params;
  Gradients g;
  g.alpha = params.alpha;
  g.beta = params.beta;
  g.gamma = params.gamma;
  const std::size_t count = params.entry_count();
  for (std::size_t k = 0; k < count; ++k) {
    const double original = work.entry(k);
    work.entry(k) = original + step;
    const double plus = loss(work);
    work.entry(k) = original - step;
    const double minus = loss(work);
    work.entry(k) = original;
    g.entry(k) = (plus - minus) / (2.0 * step);
  }
  return g;
}

std::string_view family_name(Family family) {
  switch (family) {
    case Family::alpha:
      return "alpha";
    case Family::beta:
      return "beta";
    case Family::gamma:
      return "gamma";
  }
  return "?";
}

EntryIndex locate_entry(const PathValues& values, std::size_t flat) {
  std::size_t rest = flat;
  for (std::size_t l = 0; l < values.alpha.size(); ++l) {
    const auto size = static_cast<std::size_t>(values.alpha[l].size());
    if (rest < size) return {Family::alpha, l, static_cast<Eigen::Index>(rest), 0};
    rest -= size;
  }
  for (std::size_t l = 0; l < values.beta.size(); ++l) {
    const auto size = static_cast<std::size_t>(values.beta[l].size());
    if (rest < size) {
      const auto cols = static_cast<std::size_t>(values.beta[l].cols());
      return {Family::beta, l, static_cast<Eigen::Index>(rest / cols),
              static_cast<Eigen::Index>(rest % cols)};
    }
    rest -= size;
  }
  for (std::size_t l = 0; l < values.gamma.size(); ++l) {
    const auto size = static_cast<std::size_t>(values.gamma[l].size());
    if (rest < size) return {Family::gamma, l, static_cast<Eigen::Index>(rest), 0};
    rest -= size;
  }
  throw ShapeError("locate_entry: index " + std::to_string(flat) + " out of range");
}

GradcheckReport compare_gradients(const PathValues& analytic, const PathValues& numeric,
                                  double rel_tol, double abs_tol, const std::vector<bool>& skip) {
  if (!analytic.same_shape(numeric)) throw ShapeError("compare_gradients: shape mismatch");
  const std::size_t count = analytic.entry_count();
  if (!skip.empty() && skip.size() != count) throw ShapeError("compare_gradients: bad skip mask");
  GradcheckReport report;
  std::vector<Offender> all;
  for (std::size_t k = 0; k < count; ++k) {
    if (!skip.empty() && skip[k]) {
      ++report.skipped;
      continue;
    }
    ++report.checked;
    const double a = analytic.entry(k);
    const double n = numeric.entry(k);
    const double allowed = abs_tol + rel_tol * std::max(std::abs(a), std::abs(n));
    const double diff = std::abs(a - n);
    double ratio = diff / allowed;
    if (!std::isfinite(a) || !std::isfinite(n)) ratio = std::numeric_limits<double>::infinity();
    if (!(diff <= allowed)) ++report.failed;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    all.push_back({locate_entry(analytic, k), a, n, ratio});
  }
  const std::size_t shown = std::min(kWorstShown, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(shown), all.end(),
                    [](const Offender& x, const Offender& y) { return x.ratio > y.ratio; });
  all.resize(shown);
  report.worst = std::move(all);
  return report;
}

std::string GradcheckReport::text() const {
  std::ostringstream out;
  out << (passed() ? "PASS" : "FAIL") << ": " << checked << " checked, " << failed
      << " failed, " << skipped << " skipped (kink neighbourhoods)\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst error/tolerance ratio %.3g\n", worst_ratio);
  out << buf;
  for (const auto& o : worst) {
    std::snprintf(buf, sizeof buf, "  %-5s l=%zu i=%ld j=%ld analytic=% .10e numeric=% .10e ratio=%.3g%s\n",
                  std::string(family_name(o.where.family)).c_str(), o.where.l,
                  static_cast<long>(o.where.i), static_cast<long>(o.where.j), o.analytic,
                  o.numeric, o.ratio, o.ratio > 1.0 ? "  <-- fail" : "");
    out << buf;
  }
  return out.str();
}

std::vector<bool> kink_mask(const ODENetSpec& spec, const ParamPath& params, const Mat& inputs) {
  if (!spec.activation().has_kink()) return {};
  const BatchTrajectory traj = forward_batch(spec, params, inputs);
  // Latest step whose pre-activation sits near a kink; everything upstream is masked.
  int latest = -1;
  for (int l = 0; l < spec.L(); ++l) {
    if (traj.z[static_cast<std::size_t>(l)].cwiseAbs().minCoeff() < kKinkRadius) latest = l;
  }
  std::vector<bool> mask(params.entry_count(), false);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const EntryIndex e = locate_entry(params, k);
    if (e.family != Family::alpha && static_cast<int>(e.l) < latest) mask[k] = true;
  }
  return mask;
}

GradcheckReport gradcheck_odenet(const ODENetSpec& spec, const ParamPath& params,
                                 const Mat& inputs, const Mat& targets,
                                 const GradcheckOptions& options) {
  MinibatchResult r = minibatch_gradient(spec, params, inputs, targets, options.scheme);
  r.grads.scale(spec.h());
  if (options.corrupt_gamma) {
    for (auto& g : r.grads.gamma) g = -g;
  }
  const PathLoss loss = [&](const ParamPath& p) {
    return minibatch_loss(predict_batch(spec, p, inputs), targets);
  };
  const Gradients numeric = fd_gradient(loss, params, options.step);
  return compare_gradients(r.grads, numeric, options.rel_tol, options.abs_tol,
                           kink_mask(spec, params, inputs));
}

}  // namespace odenet
