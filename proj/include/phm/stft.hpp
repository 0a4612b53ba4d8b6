#pragma once

#include <cstddef>
#include <vector>

#include "phm/grid.hpp"
#include "phm/signal.hpp"

namespace phm {

struct StftConfig {
  std::size_t window_size = 512;
  std::size_t hop_size = 128;
  std::size_t fft_size = 512;
  std::size_t discard_low_bins = 4;

  /// 512/128 with the four lowest bins dropped (253 model bins).
  static StftConfig realtime() { return {512, 128, 512, 4}; }
  /// 1024/256; seven bins drop the same band, up to and including 93.75 Hz.
  static StftConfig non_realtime() { return {1024, 256, 1024, 7}; }

  std::size_t full_bins() const { return fft_size / 2 + 1; }
  std::size_t model_bins() const { return full_bins() - discard_low_bins; }
  // Frames produced for a signal of n samples (0 if shorter than a window).
  std::size_t frame_count(std::size_t n) const;
  // Samples spanned by the overlap-add of `frames` frames.
  std::size_t span_samples(std::size_t frames) const;

  void validate() const;
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

ComplexSpectrogram stft(const SignalBuffer &signal, const StftConfig &cfg);

/// Weighted overlap-add resynthesis; expects the untrimmed bin count.
/// Output length is span_samples(frames).
SignalBuffer istft(const ComplexSpectrogram &spec, const StftConfig &cfg);

ComplexSpectrogram trim_low_bins(const ComplexSpectrogram &spec, std::size_t n);
ComplexSpectrogram restore_low_bins(const ComplexSpectrogram &spec, std::size_t n);

}  // namespace phm
