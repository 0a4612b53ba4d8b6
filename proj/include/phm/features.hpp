#pragma once

#include <array>

#include "phm/grid.hpp"
#include "phm/stft.hpp"

namespace phm {

inline constexpr double kMagnitudeFloor = 1e-7;
inline constexpr std::size_t kFeatureChannels = 5;

/// Model input channels, each frames x bins:
///   0 log-magnitude, 1/2 cos/sin of demodulated phase, 3 group delay,
///   4 delta-phase.
struct FeatureStack {
  std::array<RealGrid, kFeatureChannels> channels;

  std::size_t frames() const { return channels[0].frames(); }
  std::size_t bins() const { return channels[0].bins(); }
};

/// Wraps to (-pi, pi].
double wrap_phase(double phi);

/// `spec` is the trimmed spectrogram; bin f corresponds to FFT bin
/// f + cfg.discard_low_bins for demodulation.
FeatureStack extract_features(const ComplexSpectrogram &spec, const StftConfig &cfg);

}  // namespace phm
