#include "odenet/checkpoint.hpp"

#include "odenet/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace odenet {
namespace {

constexpr char kMagic[4] = {'O', 'D', 'N', 'T'};
constexpr std::uint32_t kMaxDim = 1u << 20;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) bytes_.push_back(static_cast<std::uint8_t>(bits >> s));
  }
  void vec(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void mat(const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw FormatError("short write to checkpoint '" + path + "'");
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::vector<std::uint8_t> bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) throw FormatError("checkpoint '" + path_ + "' is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= std::uint32_t{bytes_[pos_++]} << (8 * s);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int s = 0; s < 8; ++s) bits |= std::uint64_t{bytes_[pos_++]} << (8 * s);
    return std::bit_cast<double>(bits);
  }
  Vec vec(Eigen::Index size) {
    Vec v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = f64();
    return v;
  }
  Mat mat(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f64();
    }
    return m;
  }
  bool done() const { return pos_ == bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string path_;
};

void write_body(Writer& w, ModelKind kind, const Mat& a, double horizon, std::size_t count,
                const Activation& act, const std::vector<Vec>& alpha,
                const std::vector<Mat>& beta, const std::vector<Vec>& gamma, int steps) {
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(a.cols()));
  w.u32(static_cast<std::uint32_t>(a.rows()));
  w.u32(static_cast<std::uint32_t>(steps));
  w.f64(horizon);
  w.u8(act.code());
  w.u8(static_cast<std::uint8_t>(kind));
  w.mat(a);
  for (std::size_t l = 0; l < count; ++l) w.vec(alpha[l]);
  for (std::size_t l = 0; l < count; ++l) w.mat(beta[l]);
  for (std::size_t l = 0; l < count; ++l) w.vec(gamma[l]);
}

}  // namespace

void save_checkpoint(const std::string& path, const ODENetSpec& spec, const ParamPath& params) {
  require_shape(spec, params, "save_checkpoint");
  Writer w;
  write_body(w, ModelKind::odenet, spec.A(), spec.T(), params.points(), spec.activation(),
             params.alpha, params.beta, params.gamma, spec.L());
  w.save(path);
}

void save_checkpoint(const std::string& path, const ResNetParams& params) {
  params.validate();
  Writer w;
  write_body(w, ModelKind::resnet, params.A, 1.0, params.alpha.size(), params.activation,
             params.alpha, params.beta, params.gamma, params.L());
  w.save(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path);
  if (r.bytes().size() < 4 || std::memcmp(r.bytes().data(), kMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic in '" + path + "'");
  }
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  const std::uint32_t m = r.u32();
  const std::uint32_t steps = r.u32();
  if (n == 0 || m == 0 || n > kMaxDim || m > kMaxDim || steps > kMaxDim) {
    throw FormatError("checkpoint '" + path + "' has implausible dimensions");
  }
  Checkpoint c;
  c.T = r.f64();
  c.activation = Activation::from_code(r.u8());
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("unknown model kind " + std::to_string(kind) + " in checkpoint");
  c.kind = static_cast<ModelKind>(kind);
  c.L = static_cast<int>(steps);
  const std::size_t count = c.kind == ModelKind::odenet ? steps + std::size_t{1} : steps;
  // Reject obviously truncated files before allocating.
  r.need((std::size_t{m} * n + count * (m + std::size_t{n} * n + n)) * 8);
  c.A = r.mat(m, n);
  for (std::size_t l = 0; l < count; ++l) c.alpha.push_back(r.vec(m));
  for (std::size_t l = 0; l < count; ++l) c.beta.push_back(r.mat(n, n));
  for (std::size_t l = 0; l < count; ++l) c.gamma.push_back(r.vec(n));
  if (!r.done()) throw FormatError("checkpoint '" + path + "' has trailing bytes");
  return c;
}

std::pair<ODENetSpec, ParamPath> Checkpoint::odenet() const {
  if (kind != ModelKind::odenet) throw FormatError("checkpoint holds a ResNet, not an ODENet");
  ODENetSpec spec(A, T, L, activation);
  ParamPath p;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  return {std::move(spec), std::move(p)};
}

ResNetParams Checkpoint::resnet() const {
  if (kind != ModelKind::resnet) throw FormatError("checkpoint holds an ODENet, not a ResNet");
  ResNetParams p;
  p.A = A;
  p.activation = activation;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.validate();
  return p;
}

}  // namespace odenet
