#pragma once

#include <string>

#include "phm/grid.hpp"
#include "phm/signal.hpp"

namespace phm {

inline constexpr double kSiSdrCapDb = 200.0;

/// Magnitude-weighted mean angle between A and B in degrees, weights |A|.
double phase_distance(const ComplexSpectrogram &a, const ComplexSpectrogram &b);

double si_sdr(const SignalBuffer &reference, const SignalBuffer &estimate);

/// Relative phase-distance improvement of y_hat over x, in percent.
double phase_gain(const ComplexSpectrogram &y, const ComplexSpectrogram &x,
                  const ComplexSpectrogram &y_hat);

struct MetricReport {
  std::string reference_id;
  std::string estimate_id;
  double si_sdr_db = 0.0;
  double phase_distance_deg = 0.0;

  std::string to_text() const;
  std::string to_json() const;
};

}  // namespace phm
