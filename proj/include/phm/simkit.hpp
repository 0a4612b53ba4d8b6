#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phm/signal.hpp"

namespace phm {

inline constexpr std::size_t kTailGap = 32;       // samples between the direct impulse and the tail
inline constexpr double kTailScale = 0.05;        // tail noise std relative to direct_gain
inline constexpr std::size_t kSegmentLength = 32000;

struct RirParams {
  std::size_t direct_delay = 0;
  double t60 = 0.5;  // seconds
  std::size_t tail_length = 8000;
  double direct_gain = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Both parts share one length: direct_delay + kTailGap + tail_length.
struct RoomResponse {
  std::vector<double> direct;
  std::vector<double> reverb;
};

/// exp(-6.908 (i + 1) / (t60 fs)) for tail sample i: 60 dB down after t60.
double rir_envelope(double t60, std::size_t i);
RoomResponse synth_rir(const RirParams &params);

struct MixtureTruth {
  SignalBuffer x, y_d, y_r, y_n;
  double snr_db = 0.0;
};

/// Convolves the dry source with both parts, keeps the first `length`
/// samples (default: full convolution) and scales the noise to `snr_db`
/// relative to y_d + y_r.
MixtureTruth mix(const SignalBuffer &dry, const RoomResponse &rir, const SignalBuffer &noise,
                 double snr_db, std::optional<std::size_t> length = std::nullopt);

struct ScenarioRanges {
  double snr_min_db = -10.0, snr_max_db = 30.0;
  double t60_min = 0.1, t60_max = 1.0;
  std::size_t length = kSegmentLength;

  void validate() const;
};

struct ScenarioParams {
  double snr_db;
  double t60;
  std::size_t direct_delay;
  double direct_gain;
  double f0;                  // harmonic source fundamental, Hz
  std::uint64_t source_seed;  // filtered-noise and modulation draws
  std::uint64_t rir_seed;
  std::uint64_t noise_seed;
};

ScenarioParams draw_scenario_params(std::uint64_t seed, const ScenarioRanges &ranges = {});
MixtureTruth sample_scenario(std::uint64_t seed, const ScenarioRanges &ranges = {});
MixtureTruth render_scenario(const ScenarioParams &params, std::size_t length = kSegmentLength);

/// 10 log10(|y_d + y_r|^2 / |y_n|^2) measured on the components.
double measured_snr_db(const SignalBuffer &y_d, const SignalBuffer &y_r, const SignalBuffer &y_n);

}  // namespace phm
