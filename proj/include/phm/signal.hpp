#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phm {

inline constexpr int kSampleRate = 16000;

/// Mono time-domain signal. Construction rejects non-finite samples and any
/// rate other than 16 kHz.
class SignalBuffer {
 public:
  SignalBuffer() = default;
  explicit SignalBuffer(std::vector<double> samples, int sample_rate = kSampleRate);
  static SignalBuffer zeros(std::size_t n) { return SignalBuffer(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int sample_rate() const { return kSampleRate; }
  double operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<double> &samples() const { return samples_; }
  std::span<const double> view() const { return samples_; }
  operator std::span<const double>() const { return samples_; }

 private:
  std::vector<double> samples_;
};

double energy(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace phm
