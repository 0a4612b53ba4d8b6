#pragma once

#include <cstdint>
#include <limits>
#include <utility>

#include "phm/grid.hpp"
#include "phm/signal.hpp"

namespace phm {

inline constexpr double kDegenerateMagnitude = 1e-8;  // sides shorter than this have no angle
inline constexpr double kClipEpsilon = 1e-8;          // |2*sigma - 1| below this skips the beta clip

/// Pre-activation outputs of the mask head for one source/rest pair.
struct MaskLogits {
  RealGrid z_k;
  RealGrid z_notk;
  RealGrid beta_logit;
  RealGrid q0;
  RealGrid q1;

  MaskLogits() = default;
  MaskLogits(std::size_t frames, std::size_t bins)
      : z_k(frames, bins), z_notk(frames, bins), beta_logit(frames, bins), q0(frames, bins),
        q1(frames, bins) {}
  std::size_t frames() const { return z_k.frames(); }
  std::size_t bins() const { return z_k.bins(); }
  void validate() const;
};

struct MagnitudeMasks {
  RealGrid mag_k;
  RealGrid mag_notk;
  RealGrid beta;
  RealGrid excess;  // beta - 1, without the cancellation of forming it from beta
  RealGrid diff;    // mag_k - mag_notk = beta * tanh(gap / 2)
};

enum class GumbelMode { kDeterministic, kStochastic };

struct GumbelConfig {
  double temperature = 1.0;
  GumbelMode mode = GumbelMode::kDeterministic;
  std::uint64_t seed = 0;
};

struct PhaseFactors {
  RealGrid cos_k, sin_k;
  RealGrid cos_notk, sin_notk;
};

/// Complex mask pair whose sum is 1 in every bin.
struct PhmMaskField {
  RealGrid mag_k, mag_notk, beta;
  SignGrid xi;
  RealGrid cos_dk, sin_dk, cos_dnotk, sin_dnotk;
  ComplexSpectrogram mask_k, mask_notk;

  std::size_t frames() const { return mask_k.frames(); }
  std::size_t bins() const { return mask_k.bins(); }
};

double sigmoid(double x);
double softplus(double x);
/// Inverse of softplus for y >= 0; y == 0 maps to a logit whose softplus is exactly 0.
double softplus_inverse(double y);

MagnitudeMasks magnitude_masks(const MaskLogits &logits);
SignGrid gumbel_sign(const RealGrid &q0, const RealGrid &q1, const GumbelConfig &cfg);
PhaseFactors phase_factors(const RealGrid &mag_k, const RealGrid &mag_notk, const SignGrid &xi);
PhaseFactors phase_factors(const MagnitudeMasks &mags, const SignGrid &xi);
PhmMaskField assemble_masks(const MaskLogits &logits, const GumbelConfig &cfg = {});

/// Field whose source mask is 1 + 0j (and complement 0) everywhere.
PhmMaskField pass_through_field(std::size_t frames, std::size_t bins);
/// Field whose source mask is 0 (and complement 1) everywhere.
PhmMaskField stop_field(std::size_t frames, std::size_t bins);

std::pair<ComplexSpectrogram, ComplexSpectrogram> apply_mask(const ComplexSpectrogram &x,
                                                             const PhmMaskField &field);

struct Decomposition {
  ComplexSpectrogram direct;
  ComplexSpectrogram reverb;
  ComplexSpectrogram noise;
};

/// `field_d` separates direct vs rest, `field_n` noise vs rest; the
/// reverberation is the remaining side X - Y_d - Y_n.
Decomposition quadrangle_decompose(const ComplexSpectrogram &x, const PhmMaskField &field_d,
                                   const PhmMaskField &field_n);

/// Analytic inverse of the mask construction: logits whose deterministic
/// PHM reproduces y_target / x in every bin with |x| > kDegenerateMagnitude.
/// Remaining bins get pass-through logits.
MaskLogits oracle_fit(const ComplexSpectrogram &x, const ComplexSpectrogram &y_target);

/// Sentinel for remix: drop the reverberant component entirely.
inline constexpr double kSuppressReverb = -std::numeric_limits<double>::infinity();

/// out = y_d + 10^(gain_db/20) * y_r.
SignalBuffer remix(const SignalBuffer &y_d, const SignalBuffer &y_r, double reverb_gain_db);

}  // namespace phm
