#include "phm/stft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "phm/fft.hpp"

namespace phm {

void StftConfig::validate() const {
  if (window_size == 0 || hop_size == 0) throw Error("stft: window and hop must be positive");
  if (window_size % hop_size != 0) throw Error("stft: hop_size must divide window_size");
  if (fft_size < window_size) throw Error("stft: fft_size must be >= window_size");
  if (discard_low_bins >= full_bins()) throw Error("stft: discard_low_bins exceeds bin count");
}

std::size_t StftConfig::frame_count(std::size_t n) const {
  if (n < window_size) return 0;
  return (n - window_size) / hop_size + 1;
}

std::size_t StftConfig::span_samples(std::size_t frames) const {
  if (frames == 0) return 0;
  return (frames - 1) * hop_size + window_size;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

ComplexSpectrogram stft(const SignalBuffer &signal, const StftConfig &cfg) {
  cfg.validate();
  if (signal.size() < cfg.window_size) {
    throw Error("stft: insufficient samples (" + std::to_string(signal.size()) +
                " < window " + std::to_string(cfg.window_size) + ")");
  }
  const std::size_t frames = cfg.frame_count(signal.size());
  const auto window = hann_window(cfg.window_size);
  RealFft fft(cfg.fft_size);
  ComplexSpectrogram out(frames, cfg.full_bins());
  std::vector<double> buf(cfg.window_size);
  const auto &x = signal.samples();
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t offset = t * cfg.hop_size;
    for (std::size_t n = 0; n < cfg.window_size; ++n) buf[n] = x[offset + n] * window[n];
    fft.forward(buf, out.row(t));
  }
  return out;
}

SignalBuffer istft(const ComplexSpectrogram &spec, const StftConfig &cfg) {
  cfg.validate();
  if (spec.bins() != cfg.full_bins()) {
    throw Error("istft: shape mismatch (" + std::to_string(spec.bins()) + " bins, expected " +
                std::to_string(cfg.full_bins()) + ")");
  }
  const std::size_t frames = spec.frames();
  const std::size_t len = cfg.span_samples(frames);
  std::vector<double> acc(len, 0.0), norm(len, 0.0);
  const auto window = hann_window(cfg.window_size);
  RealFft fft(cfg.fft_size);
  std::vector<double> buf(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    fft.inverse(spec.row(t), buf);
    const std::size_t offset = t * cfg.hop_size;
    for (std::size_t n = 0; n < cfg.window_size; ++n) {
      acc[offset + n] += window[n] * buf[n];
      norm[offset + n] += window[n] * window[n];
    }
  }
  // Samples where every overlapping window vanishes (the very first one) carry
  // no information and are left at zero.
  for (std::size_t i = 0; i < len; ++i) acc[i] = norm[i] > 1e-30 ? acc[i] / norm[i] : 0.0;
  return SignalBuffer(std::move(acc));
}

ComplexSpectrogram trim_low_bins(const ComplexSpectrogram &spec, std::size_t n) {
  if (n >= spec.bins()) {
    throw Error("trim_low_bins: cannot discard " + std::to_string(n) + " of " +
                std::to_string(spec.bins()) + " bins");
  }
  ComplexSpectrogram out(spec.frames(), spec.bins() - n);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (std::size_t f = 0; f < out.bins(); ++f) out(t, f) = spec(t, f + n);
  }
  return out;
}

ComplexSpectrogram restore_low_bins(const ComplexSpectrogram &spec, std::size_t n) {
  ComplexSpectrogram out(spec.frames(), spec.bins() + n);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (std::size_t f = 0; f < spec.bins(); ++f) out(t, f + n) = spec(t, f);
  }
  return out;
}

}  // namespace phm
