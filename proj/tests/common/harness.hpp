#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "phm/engine.hpp"

namespace harness {

// Two mixed-stride layers on a narrow band; cheap enough for exhaustive checks.
inline phm::UNetConfig small_config(int bins = 16) {
  phm::UNetConfig cfg;
  cfg.encoder = {{5, 3, 2, 1, 4}, {3, 3, 2, 2, 6}};
  cfg.input_bins = bins;
  cfg.frames = 12;
  cfg.lookahead_ms = 16.0;
  cfg.decoder_out_channels = 4;
  return cfg;
}

template <typename Real>
std::vector<Real> to_real(const std::vector<double> &v) {
  return std::vector<Real>(v.begin(), v.end());
}

// Naive window ending at input frame n, zero before the first frame.
template <typename Real>
std::vector<Real> window_ending_at(const std::vector<std::vector<Real>> &frames, std::int64_t n, int T) {
  const std::size_t fs = frames.front().size();
  std::vector<Real> w(static_cast<std::size_t>(T) * fs, Real(0));
  for (int i = 0; i < T; ++i) {
    const std::int64_t src = n - T + 1 + i;
    if (src < 0) continue;
    std::copy(frames[src].begin(), frames[src].end(), w.begin() + static_cast<std::ptrdiff_t>(i * fs));
  }
  return w;
}

struct EquivalenceResult {
  double max_abs_error = 0.0;
  std::size_t emissions = 0;
  std::size_t first_emission_push = 0;  // 1-based
};

// Pushes `pushes` random frames and compares every emission with
// naive_infer on the matching zero-padded window.
template <typename Real>
EquivalenceResult stream_vs_naive(const phm::Network<Real> &net, std::size_t pushes, std::uint64_t seed,
                                  std::size_t compare_every = 1) {
  const int T = net.geometry().frames;
  std::vector<std::vector<Real>> frames;
  for (std::size_t n = 0; n < pushes; ++n) {
    frames.push_back(to_real<Real>(oracle::randn(net.input_frame_size(), seed * 100003 + n)));
  }
  phm::StreamState<Real> state(net);
  EquivalenceResult r;
  for (std::size_t n = 0; n < pushes; ++n) {
    auto out = state.push(frames[n]);
    if (!out) continue;
    if (r.emissions == 0) r.first_emission_push = n + 1;
    if (r.emissions++ % compare_every != 0) continue;
    const auto ref = net.naive_infer(window_ending_at(frames, static_cast<std::int64_t>(n), T));
    for (std::size_t i = 0; i < ref.size(); ++i) {
      r.max_abs_error = std::max(r.max_abs_error, std::abs(static_cast<double>((*out)[i]) - ref[i]));
    }
  }
  return r;
}

}  // namespace harness
