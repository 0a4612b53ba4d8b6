#include "phm/signal.hpp"

#include <cmath>
#include <string>

#include "phm/error.hpp"

namespace phm {

SignalBuffer::SignalBuffer(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)) {
  if (sample_rate != kSampleRate) {
    throw Error("unsupported sample rate " + std::to_string(sample_rate) +
                " (expected 16000)");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw Error("non-finite sample at index " + std::to_string(i));
    }
  }
}

double energy(std::span<const double> x) { return dot(x, x); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace phm
