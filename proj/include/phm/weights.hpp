#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phm/unet.hpp"

namespace phm {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;  // row-major

  std::size_t element_count() const;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of named tensors. Convolution weights are stored as
/// [kernel_t, kernel_f, in_channels, out_channels], biases as [out_channels].
class WeightSet {
 public:
  enum class Provenance { kFile, kSeededRandom };

  WeightSet() = default;

  /// Uniform [-0.1, 0.1] for every weight and bias of `cfg`.
  static WeightSet seeded(const UNetConfig &cfg, std::uint64_t seed, double scale = 0.1);
  /// All-zero tensors shaped for `cfg`.
  static WeightSet zeros(const UNetConfig &cfg);

  void set(const std::string &name, Tensor tensor);
  const Tensor &at(const std::string &name) const;
  Tensor &at(const std::string &name);
  bool contains(const std::string &name) const;
  const std::vector<NamedTensor> &tensors() const { return tensors_; }

  Provenance provenance() const { return provenance_; }
  std::uint64_t seed() const { return seed_; }
  void set_provenance(Provenance p, std::uint64_t seed = 0) {
    provenance_ = p;
    seed_ = seed;
  }

  /// Throws "shape mismatch: <layer>" when a tensor does not fit `cfg`.
  void check_shapes(const UNetConfig &cfg) const;

 private:
  std::vector<NamedTensor> tensors_;
  Provenance provenance_ = Provenance::kFile;
  std::uint64_t seed_ = 0;
};

/// Expected tensor dims per layer name ("<layer>.weight", "<layer>.bias").
std::vector<std::pair<std::string, std::vector<std::uint32_t>>> expected_tensors(const UNetConfig &cfg);

/// Binary container: "PHMW", u32 version, u32 count, then per tensor
/// u32 name length, name bytes, u32 rank, u32 dims, f32 values. Little-endian.
void save_weights(const std::string &path, const WeightSet &weights);
WeightSet load_weights(const std::string &path);
std::vector<std::uint8_t> serialize_weights(const WeightSet &weights);
WeightSet deserialize_weights(const std::vector<std::uint8_t> &bytes);

/// Double-precision convolution parameters; weight is row-major with
/// out_channels as the fastest axis.
struct ConvWeights {
  std::vector<std::uint32_t> dims;
  std::vector<double> weight;
  std::vector<double> bias;

  std::size_t out_channels() const { return dims.empty() ? 0 : dims.back(); }
};

struct BatchNormParams {
  std::vector<double> gamma, beta, mean, variance;
  double eps = 1e-5;
};

/// Folds an inference-mode batch norm that follows the convolution into it.
ConvWeights fuse_batchnorm(const ConvWeights &conv, const BatchNormParams &bn);

}  // namespace phm
