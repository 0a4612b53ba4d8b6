#include "phm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "phm/error.hpp"

namespace phm {

double phase_distance(const ComplexSpectrogram &a, const ComplexSpectrogram &b) {
  require_same_shape(a, b, "phase_distance");
  double weight = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = std::abs(a[i]);
    if (w == 0.0) continue;
    weight += w;
    if (b[i] == std::complex<double>(0.0, 0.0)) continue;
    acc += w * std::abs(std::arg(b[i] * std::conj(a[i])));
  }
  if (weight == 0.0) throw Error("phase_distance: undefined weights (all-zero reference)");
  return acc / weight * 180.0 / std::numbers::pi;
}

double si_sdr(const SignalBuffer &reference, const SignalBuffer &estimate) {
  if (reference.size() != estimate.size()) throw Error("si_sdr: length mismatch");
  const double ref_energy = energy(reference);
  if (ref_energy == 0.0) throw Error("si_sdr: zero reference");
  const double alpha = dot(estimate, reference) / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = alpha * reference[i];
    const double e = s - estimate[i];
    target += s * s;
    residual += e * e;
  }
  if (residual == 0.0) return kSiSdrCapDb;
  if (target == 0.0) return -kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / residual));
}

double phase_gain(const ComplexSpectrogram &y, const ComplexSpectrogram &x,
                  const ComplexSpectrogram &y_hat) {
  const double before = phase_distance(y, x);
  if (before == 0.0) throw Error("phase_gain: no phase error to improve");
  return 100.0 * (before - phase_distance(y, y_hat)) / before;
}

std::string MetricReport::to_text() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "reference: %s\nestimate: %s\nsi_sdr_db: %.2f\nphase_distance_deg: %.4f\n",
                reference_id.c_str(), estimate_id.c_str(), si_sdr_db, phase_distance_deg);
  return buf;
}

std::string MetricReport::to_json() const {
  nlohmann::json j{{"reference", reference_id},
                   {"estimate", estimate_id},
                   {"si_sdr_db", si_sdr_db},
                   {"phase_distance_deg", phase_distance_deg}};
  return j.dump(2);
}

}  // namespace phm
