#include "phm/features.hpp"

#include <cmath>
#include <numbers>

namespace phm {

double wrap_phase(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(phi, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

FeatureStack extract_features(const ComplexSpectrogram &spec, const StftConfig &cfg) {
  const std::size_t frames = spec.frames();
  const std::size_t bins = spec.bins();
  FeatureStack out;
  for (auto &ch : out.channels) ch = RealGrid(frames, bins);

  RealGrid phase(frames, bins);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < bins; ++f) {
      const auto x = spec(t, f);
      const double mag = std::abs(x);
      out.channels[0](t, f) = std::log(mag + kMagnitudeFloor);
      const double phi = mag > 0.0 ? wrap_phase(std::arg(x)) : 0.0;
      phase(t, f) = phi;
      double demod = 0.0;
      if (mag > 0.0) {
        const double bin = static_cast<double>(f + cfg.discard_low_bins);
        const double advance = 2.0 * std::numbers::pi * bin * static_cast<double>(cfg.hop_size) /
                               static_cast<double>(cfg.fft_size);
        // Reduce the per-frame advance first so large t does not lose precision.
        demod = wrap_phase(phi - wrap_phase(advance * static_cast<double>(t % cfg.fft_size)));
      }
      out.channels[1](t, f) = std::cos(demod);
      out.channels[2](t, f) = std::sin(demod);
    }
  }
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < bins; ++f) {
      out.channels[3](t, f) = f == 0 ? 0.0 : wrap_phase(phase(t, f) - phase(t, f - 1));
      out.channels[4](t, f) = t == 0 ? 0.0 : wrap_phase(phase(t, f) - phase(t - 1, f));
    }
  }
  return out;
}

}  // namespace phm
