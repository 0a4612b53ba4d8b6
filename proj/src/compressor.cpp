#include "phm/compressor.hpp"

#include <algorithm>
#include <cmath>

#include "phm/error.hpp"

namespace phm {

namespace {
constexpr double kSilenceDb = -200.0;
constexpr double kPowerFloor = 1e-20;
}  // namespace

void DrcConfig::validate() const {
  if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw Error("drc: ratio must be >= 1");
  if (!(attack_ms > 0.0) || !(release_ms > 0.0)) throw Error("drc: attack and release must be positive");
  if (!std::isfinite(threshold_db) || !std::isfinite(makeup_db)) throw Error("drc: non-finite level");
}

double smoothing_coefficient(double ms) {
  return 1.0 - std::exp(-1.0 / (ms * (kSampleRate / 1000.0)));
}

Compressor::Compressor(DrcConfig cfg)
    : cfg_(cfg), attack_(0.0), release_(0.0), level_db_(kSilenceDb) {
  cfg_.validate();
  attack_ = smoothing_coefficient(cfg_.attack_ms);
  release_ = smoothing_coefficient(cfg_.release_ms);
}

void Compressor::reset() {
  power_ = 0.0;
  level_db_ = kSilenceDb;
}

double Compressor::envelope_db() const { return level_db_; }

double Compressor::process(double x) {
  // Mean-square detector, then attack/release ballistics in the dB domain.
  power_ += attack_ * (x * x - power_);
  const double inst_db = std::max(kSilenceDb, 10.0 * std::log10(power_ + kPowerFloor));
  const double coef = inst_db > level_db_ ? attack_ : release_;
  level_db_ += coef * (inst_db - level_db_);
  const double gain_db =
      std::min(0.0, (cfg_.threshold_db - level_db_) * (1.0 - 1.0 / cfg_.ratio)) + cfg_.makeup_db;
  return x * std::pow(10.0, gain_db / 20.0);
}

SignalBuffer compress(const SignalBuffer &signal, const DrcConfig &cfg) {
  Compressor c(cfg);
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.process(signal[i]);
  return SignalBuffer(std::move(out));
}

}  // namespace phm
