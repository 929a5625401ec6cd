#pragma once

#include "odenet/model.hpp"
#include "odenet/resnet.hpp"

#include <string>
#include <utility>

namespace odenet {

enum class ModelKind : std::uint8_t { odenet = 0, resnet = 1 };

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (little-endian): "ODNT", u32 version, u32 n, u32 m, u32 L,
/// f64 T, u8 activation code, u8 model kind, A row-major, then every α, every
/// β (row-major), every γ. ODENet files hold L+1 grid points, ResNet files L
/// layers (T is stored as 1 and unused).
struct Checkpoint {
  ModelKind kind = ModelKind::odenet;
  Mat A;
  double T = 1.0;
  int L = 0;
  Activation activation = Activation::tanh();
  std::vector<Vec> alpha;
  std::vector<Mat> beta;
  std::vector<Vec> gamma;

  /// Throws FormatError when the checkpoint holds the other kind of model.
  std::pair<ODENetSpec, ParamPath> odenet() const;
  ResNetParams resnet() const;
};

void save_checkpoint(const std::string& path, const ODENetSpec& spec, const ParamPath& params);
void save_checkpoint(const std::string& path, const ResNetParams& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace odenet
