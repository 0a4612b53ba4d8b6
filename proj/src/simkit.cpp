#include "phm/simkit.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "phm/error.hpp"
#include "phm/fft.hpp"

namespace phm {

namespace {

constexpr double kDecay60 = 6.907755278982137;  // ln(1000)

std::vector<double> convolve_truncated(std::span<const double> x, std::span<const double> h,
                                       std::size_t length) {
  auto y = fft_convolve(x, h);
  y.resize(length, 0.0);
  return y;
}

std::vector<double> harmonic_source(std::size_t n, double f0, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> rate(2.0, 6.0);
  const double am_rate = rate(rng), am_phase = phase(rng);
  const int harmonics = static_cast<int>(std::min(20.0, 7000.0 / f0));
  std::vector<double> ph(harmonics);
  for (auto &p : ph) p = phase(rng);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    double v = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      v += std::sin(2.0 * std::numbers::pi * f0 * h * t + ph[h - 1]) / h;
    }
    const double am = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * am_rate * t + am_phase);
    out[i] = 0.2 * am * v;
  }
  return out;
}

// White Gaussian noise through a one-pole low-pass with pole `a`.
std::vector<double> filtered_noise(std::size_t n, double a, double scale, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(n);
  double s = 0.0;
  for (auto &v : out) {
    s = a * s + (1.0 - a) * g(rng);
    v = scale * s;
  }
  return out;
}

}  // namespace

void RirParams::validate() const {
  if (!(t60 > 0.0) || !std::isfinite(t60)) throw Error("rir: t60 must be positive");
  if (tail_length < 1) throw Error("rir: tail_length must be >= 1");
  if (!std::isfinite(direct_gain)) throw Error("rir: non-finite direct_gain");
}

double rir_envelope(double t60, std::size_t i) {
  return std::exp(-kDecay60 * (static_cast<double>(i) + 1.0) / (t60 * kSampleRate));
}

RoomResponse synth_rir(const RirParams &p) {
  p.validate();
  const std::size_t start = p.direct_delay + kTailGap;
  RoomResponse r;
  r.direct.assign(start + p.tail_length, 0.0);
  r.reverb.assign(start + p.tail_length, 0.0);
  r.direct[p.direct_delay] = p.direct_gain;
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const double scale = kTailScale * p.direct_gain;
  for (std::size_t i = 0; i < p.tail_length; ++i) {
    r.reverb[start + i] = scale * g(rng) * rir_envelope(p.t60, i);
  }
  return r;
}

double measured_snr_db(const SignalBuffer &y_d, const SignalBuffer &y_r, const SignalBuffer &y_n) {
  if (y_d.size() != y_r.size() || y_d.size() != y_n.size()) throw Error("snr: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y_d.size(); ++i) {
    const double v = y_d[i] + y_r[i];
    s += v * v;
  }
  return 10.0 * std::log10(s / energy(y_n));
}

MixtureTruth mix(const SignalBuffer &dry, const RoomResponse &rir, const SignalBuffer &noise,
                 double snr_db, std::optional<std::size_t> length) {
  if (rir.direct.size() != rir.reverb.size() || rir.direct.empty()) throw Error("mix: malformed impulse response");
  if (dry.empty()) throw Error("mix: degenerate SNR (empty dry source)");
  if (!std::isfinite(snr_db)) throw Error("mix: snr_db must be finite");
  const std::size_t n = length.value_or(dry.size() + rir.direct.size() - 1);
  if (noise.size() < n) {
    throw Error("mix: noise shorter than the mixture (" + std::to_string(noise.size()) + " < " +
                std::to_string(n) + ")");
  }
  auto y_d = convolve_truncated(dry, rir.direct, n);
  auto y_r = convolve_truncated(dry, rir.reverb, n);
  double source = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = y_d[i] + y_r[i];
    source += v * v;
  }
  const double noise_energy = energy(std::span<const double>(noise.samples().data(), n));
  if (source == 0.0 || noise_energy == 0.0) throw Error("mix: degenerate SNR (zero-energy source or noise)");
  const double g = std::sqrt(source / (noise_energy * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> y_n(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_n[i] = g * noise[i];
    x[i] = y_d[i] + y_r[i] + y_n[i];
  }
  return {SignalBuffer(std::move(x)), SignalBuffer(std::move(y_d)), SignalBuffer(std::move(y_r)),
          SignalBuffer(std::move(y_n)), snr_db};
}

void ScenarioRanges::validate() const {
  if (!(snr_min_db <= snr_max_db) || !std::isfinite(snr_min_db) || !std::isfinite(snr_max_db)) {
    throw Error("scenario: invalid snr range");
  }
  if (!(t60_min > 0.0 && t60_min <= t60_max) || !std::isfinite(t60_max)) {
    throw Error("scenario: invalid t60 range");
  }
  if (length < 1) throw Error("scenario: length must be positive");
}

ScenarioParams draw_scenario_params(std::uint64_t seed, const ScenarioRanges &ranges) {
  ranges.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScenarioParams p;
  p.snr_db = ranges.snr_min_db + (ranges.snr_max_db - ranges.snr_min_db) * unit(rng);
  p.t60 = ranges.t60_min + (ranges.t60_max - ranges.t60_min) * unit(rng);
  p.direct_delay = static_cast<std::size_t>(unit(rng) * 160.0);
  p.direct_gain = 0.5 + 0.5 * unit(rng);
  p.f0 = 100.0 + 200.0 * unit(rng);
  p.source_seed = rng();
  p.rir_seed = rng();
  p.noise_seed = rng();
  return p;
}

MixtureTruth render_scenario(const ScenarioParams &p, std::size_t length) {
  std::mt19937_64 src_rng(p.source_seed);
  auto dry = harmonic_source(length, p.f0, src_rng);
  const auto breath = filtered_noise(length, 0.6, 0.02, src_rng);
  for (std::size_t i = 0; i < length; ++i) dry[i] += breath[i];

  RirParams rp;
  rp.direct_delay = p.direct_delay;
  rp.t60 = p.t60;
  rp.tail_length = static_cast<std::size_t>(std::ceil(p.t60 * kSampleRate));
  rp.direct_gain = p.direct_gain;
  rp.seed = p.rir_seed;
  const auto rir = synth_rir(rp);

  std::mt19937_64 noise_rng(p.noise_seed);
  std::uniform_real_distribution<double> pole(0.0, 0.9);
  const double a = pole(noise_rng);
  auto noise = filtered_noise(length, a, 1.0, noise_rng);
  return mix(SignalBuffer(std::move(dry)), rir, SignalBuffer(std::move(noise)), p.snr_db, length);
}

MixtureTruth sample_scenario(std::uint64_t seed, const ScenarioRanges &ranges) {
  return render_scenario(draw_scenario_params(seed, ranges), ranges.length);
}

}  // namespace phm
