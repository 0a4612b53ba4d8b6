#pragma once

#include "phm/signal.hpp"

namespace phm {

struct DrcConfig {
  double threshold_db = -18.0;  // dBFS
  double ratio = 3.0;
  double attack_ms = 5.0;
  double release_ms = 50.0;
  double makeup_db = 0.0;

  void validate() const;
};

/// One-pole coefficient 1 - exp(-1 / (ms * samples_per_ms)).
double smoothing_coefficient(double ms);

/// Feedforward single-band compressor with no lookahead: the gain applied to
/// sample n is computed from samples up to and including n.
class Compressor {
 public:
  explicit Compressor(DrcConfig cfg);

  double process(double x);
  void reset();
  double envelope_db() const;

 private:
  DrcConfig cfg_;
  double attack_, release_;
  double power_ = 0.0;
  double level_db_;
};

SignalBuffer compress(const SignalBuffer &signal, const DrcConfig &cfg);

}  // namespace phm
