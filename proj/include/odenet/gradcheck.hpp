#pragma once

#include "odenet/adjoint.hpp"
#include "odenet/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace odenet {

inline constexpr double kFdStep = 1e-5;
/// Pre-activations closer than this to a kink mask the upstream entries.
inline constexpr double kKinkRadius = 1e-3;

using PathLoss = std::function<double(const ParamPath&)>;

/// Central differences (loss(p + step) - loss(p - step)) / (2·step), one entry at a time.
Gradients fd_gradient(const PathLoss& loss, const ParamPath& params, double step = kFdStep);

enum class Family { alpha, beta, gamma };
std::string_view family_name(Family family);

/// Position of one scalar parameter: family, grid point, row, column (0 for vectors).
struct EntryIndex {
  Family family = Family::alpha;
  std::size_t l = 0;
  Eigen::Index i = 0;
  Eigen::Index j = 0;
};

/// Inverse of PathValues::entry's flat ordering.
EntryIndex locate_entry(const PathValues& values, std::size_t flat);

struct Offender {
  EntryIndex where;
  double analytic = 0.0;
  double numeric = 0.0;
  /// |a - n| / (abs_tol + rel_tol·max(|a|, |n|)); above 1 means failure.
  double ratio = 0.0;
};

struct GradcheckReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  double worst_ratio = 0.0;
  /// Largest ratios first, at most kWorstShown entries.
  std::vector<Offender> worst;

  bool passed() const { return failed == 0; }
  std::string text() const;
};

inline constexpr std::size_t kWorstShown = 10;

/// Entry passes when |a - n| <= abs_tol + rel_tol·max(|a|, |n|). Entries with
/// skip[flat] set are counted as skipped.
GradcheckReport compare_gradients(const PathValues& analytic, const PathValues& numeric,
                                  double rel_tol, double abs_tol,
                                  const std::vector<bool>& skip = {});

/// Flags β_j, γ_j (j < l) whenever some |(A x_l)_i| < kKinkRadius at a step
/// l < L for any sample; empty mask for activations without a kink.
std::vector<bool> kink_mask(const ODENetSpec& spec, const ParamPath& params, const Mat& inputs);

struct GradcheckOptions {
  double step = kFdStep;
  double rel_tol = 1e-4;
  double abs_tol = 1e-7;
  AdjointScheme scheme = AdjointScheme::exact;
  /// Test hook: negate the analytic G[γ] before comparing.
  bool corrupt_gamma = false;
};

/// Compares h·G (the adjoint gradients scaled by the step size, i.e. the
/// derivative of the halved loss with respect to each stored entry) against
/// finite differences of minibatch_loss.
GradcheckReport gradcheck_odenet(const ODENetSpec& spec, const ParamPath& params,
                                 const Mat& inputs, const Mat& targets,
                                 const GradcheckOptions& options = {});

}  // namespace odenet
