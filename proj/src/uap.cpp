#include "odenet/uap.hpp"

#include "odenet/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace odenet {
namespace {

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

/// Square completion [rows; basis vectors] with the last appended row negated
/// when the determinant comes out negative.
Mat complete_positive(const Mat& rows, CompileReport* report, const char* what) {
  const Eigen::Index n = rows.cols();
  const Eigen::Index k = rows.rows();
  Mat full(n, n);
  full.topRows(k) = rows;
  full.bottomRows(n - k) = basis_completion(rows, n - k);
  if (determinant(full) < 0.0) full.row(n - 1) *= -1.0;
  if (report != nullptr) {
    const double cond = condition_estimate(full);
    report->max_condition = std::max(report->max_condition, cond);
    if (!(cond <= kConditionWarning)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "completed %s is ill-conditioned (estimate %.3g)", what, cond);
      report->warnings.emplace_back(buf);
    }
  }
  return full;
}

void note_condition(const Mat& m, CompileReport* report, const char* what) {
  if (report == nullptr) return;
  const double cond = condition_estimate(m);
  report->max_condition = std::max(report->max_condition, cond);
  if (!(cond <= kConditionWarning)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s is ill-conditioned (estimate %.3g)", what, cond);
    report->warnings.emplace_back(buf);
  }
}

Vec read_values(std::istream& in, Eigen::Index count, const std::string& what) {
  Vec v(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> v(i))) throw FormatError("shallow net: cannot read " + what);
  }
  return v;
}

struct Expanded {
  std::vector<ShallowUnit> units;
  int orientation = 1;
};

Expanded expand_all(const ShallowNet& net, const Mat& a) {
  net.validate();
  if (a.rows() != net.m || a.cols() != net.n) {
    throw ShapeError("A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " but the shallow net is " + std::to_string(net.m) + "x" +
                     std::to_string(net.n));
  }
  if (check_rank(a) != a.rows()) {
    throw RankError("rank(A) = " + std::to_string(check_rank(a)) + " but m = " +
                    std::to_string(a.rows()));
  }
  Expanded out;
  if (a.rows() == a.cols()) out.orientation = sign_of(determinant(a));
  for (std::size_t u = 0; u < net.units.size(); ++u) {
    try {
      auto parts = expand_full_rank(net.units[u], out.orientation);
      for (auto& p : parts) out.units.push_back(std::move(p));
    } catch (const RankError& e) {
      throw RankError("unit " + std::to_string(u + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

Vec ShallowNet::eval(const Vec& xi) const {
  if (xi.size() != n) throw ShapeError("shallow net: input must have dimension n");
  Vec g = Vec::Zero(m);
  for (const auto& u : units) g += u.alpha.cwiseProduct(activation.eval(Vec(u.C * xi + u.d)));
  return g;
}

void ShallowNet::validate() const {
  if (n < 1 || m < 1) throw ShapeError("shallow net: n and m must be positive");
  for (std::size_t l = 0; l < units.size(); ++l) {
    const auto& u = units[l];
    if (u.alpha.size() != m || u.C.rows() != m || u.C.cols() != n || u.d.size() != m) {
      throw ShapeError("shallow net: unit " + std::to_string(l + 1) + " has wrong dimensions");
    }
    if (!u.alpha.allFinite() || !u.C.allFinite() || !u.d.allFinite()) {
      throw ShapeError("shallow net: unit " + std::to_string(l + 1) + " has non-finite entries");
    }
  }
}

ShallowNet read_shallow(std::istream& in) {
  std::string tag;
  long n = 0, m = 0, count = 0;
  std::string act;
  if (!(in >> tag >> n >> m >> count >> act) || tag != "shallow") {
    throw FormatError("shallow net: header must be `shallow n m L activation`");
  }
  if (n < 1 || m < 1 || count < 0) throw FormatError("shallow net: bad dimensions in header");
  ShallowNet net;
  net.n = n;
  net.m = m;
  net.activation = Activation::parse(act);
  for (long l = 1; l <= count; ++l) {
    const std::string where = " of unit " + std::to_string(l);
    ShallowUnit u;
    u.alpha = read_values(in, m, "alpha" + where);
    const Vec flat = read_values(in, m * n, "C" + where);
    u.C.resize(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) u.C(i, j) = flat(i * n + j);
    }
    u.d = read_values(in, m, "d" + where);
    net.units.push_back(std::move(u));
  }
  std::string extra;
  if (in >> extra) throw FormatError("shallow net: trailing content '" + extra + "'");
  net.validate();
  return net;
}

ShallowNet load_shallow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_shallow(in);
}

void write_shallow(std::ostream& out, const ShallowNet& net) {
  char buf[32];
  auto put = [&](double v, bool first) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << (first ? "" : " ") << buf;
  };
  out << "shallow " << net.n << ' ' << net.m << ' ' << net.units.size() << ' '
      << net.activation.name() << '\n';
  for (const auto& u : net.units) {
    for (Eigen::Index i = 0; i < net.m; ++i) put(u.alpha(i), i == 0);
    out << '\n';
    for (Eigen::Index i = 0; i < net.m; ++i) {
      for (Eigen::Index j = 0; j < net.n; ++j) put(u.C(i, j), i == 0 && j == 0);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < net.m; ++i) put(u.d(i), i == 0);
    out << '\n';
  }
}

std::vector<ShallowUnit> expand_full_rank(const ShallowUnit& unit, int orientation) {
  const Eigen::Index m = unit.C.rows();
  const Eigen::Index n = unit.C.cols();
  if (unit.alpha.size() != m || unit.d.size() != m) {
    throw ShapeError("expand_full_rank: alpha and d must have m entries");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (unit.C.row(i).isZero(0.0)) {
      throw RankError("row " + std::to_string(i + 1) + " of C is zero");
    }
  }
  if (m == 1) return {unit};

  std::vector<ShallowUnit> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index l = 0; l < m; ++l) {
    ShallowUnit part;
    part.alpha = Vec::Zero(m);
    part.alpha(l) = unit.alpha(l);
    part.d = Vec::Zero(m);
    part.d(l) = unit.d(l);
    const Mat fill = basis_completion(unit.C.row(l), m - 1);
    part.C.resize(m, n);
    Eigen::Index next = 0;
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == l) {
        part.C.row(i) = unit.C.row(l);
      } else {
        part.C.row(i) = fill.row(next++);
        last = i;
      }
    }
    if (m == n && sign_of(determinant(part.C)) != (orientation < 0 ? -1 : 1)) {
      part.C.row(last) *= -1.0;
    }
    out.push_back(std::move(part));
  }
  return out;
}

Mat factor_through_A(const Mat& a, const Mat& c, CompileReport* report) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) {
    throw ShapeError("factor_through_A: A and C must have the same shape");
  }
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (m > n) throw ShapeError("factor_through_A: need m <= n");
  const int rank_a = check_rank(a);
  if (rank_a != m) {
    throw RankError("rank(A) = " + std::to_string(rank_a) + " but m = " + std::to_string(m));
  }
  const int rank_c = check_rank(c);
  if (rank_c != m) {
    throw RankError("rank(C) = " + std::to_string(rank_c) + " but m = " + std::to_string(m));
  }
  if (m == n) {
    const int sa = sign_of(determinant(a));
    const int sc = sign_of(determinant(c));
    if (sa != sc) {
      throw RankError("m = n and sgn det C = " + std::to_string(sc) + " differs from sgn det A = " +
                      std::to_string(sa) + ": no P with AP = C and det P > 0 exists");
    }
    note_condition(a, report, "A");
    return LuDecomposition(a).solve(c);
  }
  const Mat a_full = complete_positive(a, report, "A");
  const Mat c_full = complete_positive(c, report, "C");
  return LuDecomposition(a_full).solve(c_full);
}

Vec lift_bias(const Mat& a, const Vec& d) {
  if (d.size() != a.rows()) throw ShapeError("lift_bias: d must have m entries");
  const Mat gram = a * a.transpose();
  if (check_rank(gram) != gram.rows()) throw RankError("lift_bias: AAᵀ is singular");
  return a.transpose() * LuDecomposition(gram).solve(d);
}

ResNetParams compile_resnet(const ShallowNet& net, const Mat& a, CompileReport* report) {
  const Expanded ex = expand_all(net, a);
  const Eigen::Index n = a.cols();
  ResNetParams out = ResNetParams::zeros(a, net.activation, static_cast<int>(ex.units.size()));
  Mat p_prev = Mat::Identity(n, n);
  Vec q_prev = Vec::Zero(n);
  for (std::size_t l = 0; l < ex.units.size(); ++l) {
    const ShallowUnit& u = ex.units[l];
    Mat p;
    Vec q;
    try {
      p = factor_through_A(a, u.C, report);
      q = lift_bias(a, u.d);
    } catch (const RankError& e) {
      throw RankError("expanded unit " + std::to_string(l + 1) + ": " + e.what());
    }
    // β = (P - P_prev) P_prev⁻¹, i.e. P_prevᵀ βᵀ = (P - P_prev)ᵀ
    const Mat beta = LuDecomposition(p_prev.transpose()).solve(Mat((p - p_prev).transpose()))
                         .transpose();
    out.alpha[l] = u.alpha;
    out.beta[l] = beta;
    out.gamma[l] = q - q_prev - beta * q_prev;
    p_prev = std::move(p);
    q_prev = std::move(q);
  }
  return out;
}

Vec PWConstantPath::integral(const Vec& xi) const {
  Vec sum = Vec::Zero(A.rows());
  for (int l = 0; l < intervals(); ++l) {
    const auto s = static_cast<std::size_t>(l);
    const double width = breakpoints[s + 1] - breakpoints[s];
    sum += width * alpha[s].cwiseProduct(activation.eval(Vec(A * (P[s] * xi + q[s]))));
  }
  return sum;
}

PWConstantPath compile_odenet_pwc(const ShallowNet& net, const Mat& a, double horizon,
                                  CompileReport* report) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ShapeError("compile_odenet_pwc: T must be positive");
  }
  const Expanded ex = expand_all(net, a);
  const auto count = static_cast<int>(ex.units.size());
  PWConstantPath path;
  path.A = a;
  path.activation = net.activation;
  path.T = horizon;
  for (int l = 0; l <= count; ++l) path.breakpoints.push_back(horizon * l / count);
  if (count == 0) path.breakpoints = {0.0, horizon};
  const double weight = count / horizon;
  for (int l = 0; l < count; ++l) {
    const ShallowUnit& u = ex.units[static_cast<std::size_t>(l)];
    try {
      path.P.push_back(factor_through_A(a, u.C, report));
      path.q.push_back(lift_bias(a, u.d));
    } catch (const RankError& e) {
      throw RankError("expanded unit " + std::to_string(l + 1) + ": " + e.what());
    }
    path.alpha.push_back(weight * u.alpha);
  }
  return path;
}

std::pair<ODENetSpec, ParamPath> pwc_to_odenet(const PWConstantPath& path,
                                               int steps_per_interval) {
  if (steps_per_interval < 1) throw ShapeError("pwc_to_odenet: steps_per_interval must be >= 1");
  if (path.intervals() < 1) throw ShapeError("pwc_to_odenet: path has no intervals");
  const int units = path.intervals();
  const int steps = units * steps_per_interval;
  ODENetSpec spec(path.A, path.T, steps, path.activation);
  const Eigen::Index n = spec.n();
  const double h = spec.h();
  ParamPath params = ParamPath::zeros(n, spec.m(), steps);

  // grid point l >= 1 sits on unit floor(l / s), clamped to the last one
  auto unit_of = [&](int l) { return std::min(l / steps_per_interval, units - 1); };
  Mat p_cur = Mat::Identity(n, n);
  Vec q_cur = Vec::Zero(n);
  for (int l = 0; l <= steps; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    params.alpha[idx] = path.alpha[static_cast<std::size_t>(unit_of(l))];
    if (l == steps) break;
    const auto target = static_cast<std::size_t>(unit_of(l + 1));
    const Mat& p_next = path.P[target];
    const Vec& q_next = path.q[target];
    const Mat beta = LuDecomposition(p_cur.transpose())
                         .solve(Mat((p_next - p_cur).transpose()))
                         .transpose() / h;
    params.beta[idx] = beta;
    params.gamma[idx] = (q_next - q_cur - h * beta * q_cur) / h;
    p_cur = p_next;
    q_cur = q_next;
  }
  return {std::move(spec), std::move(params)};
}

}  // namespace odenet
