#include "phm/oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phm/mask.hpp"
#include "phm/metrics.hpp"

namespace phm {

namespace {

constexpr double kBinFloor = 1e-6;

SignalBuffer interior(const SignalBuffer &s, std::size_t margin) {
  if (s.size() <= 2 * margin) return s;
  return SignalBuffer(std::vector<double>(s.samples().begin() + static_cast<std::ptrdiff_t>(margin),
                                          s.samples().end() - static_cast<std::ptrdiff_t>(margin)));
}

double max_relative_error(const ComplexSpectrogram &x, const ComplexSpectrogram &est,
                          const ComplexSpectrogram &ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x[i]);
    if (mag > kBinFloor) worst = std::max(worst, std::abs(est[i] - ref[i]) / mag);
  }
  return worst;
}

}  // namespace

OracleCase oracle_reconstruct(const MixtureTruth &truth, const StftConfig &cfg) {
  const auto x = stft(truth.x, cfg);
  const auto yd = stft(truth.y_d, cfg);
  const auto yn = stft(truth.y_n, cfg);
  const auto parts = quadrangle_decompose(x, assemble_masks(oracle_fit(x, yd)),
                                          assemble_masks(oracle_fit(x, yn)));
  OracleCase c;
  c.snr_db = truth.snr_db;
  c.max_bin_error = std::max(max_relative_error(x, parts.direct, yd), max_relative_error(x, parts.noise, yn));
  auto resized = [&](const ComplexSpectrogram &spec) {
    auto y = istft(spec, cfg).samples();
    y.resize(truth.x.size(), 0.0);
    return interior(SignalBuffer(std::move(y)), cfg.window_size);
  };
  c.si_sdr_direct_db = si_sdr(interior(truth.y_d, cfg.window_size), resized(parts.direct));
  c.si_sdr_noise_db = si_sdr(interior(truth.y_n, cfg.window_size), resized(parts.noise));
  return c;
}

OracleReport run_oracle_check(std::uint64_t seed, std::size_t count) {
  auto cfg = StftConfig::realtime();
  cfg.discard_low_bins = 0;
  OracleReport report;
  report.min_si_sdr_db = kSiSdrCapDb;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = seed + i;
    const auto params = draw_scenario_params(s);
    auto c = oracle_reconstruct(render_scenario(params), cfg);
    c.seed = s;
    c.t60 = params.t60;
    report.min_si_sdr_db = std::min({report.min_si_sdr_db, c.si_sdr_direct_db, c.si_sdr_noise_db});
    report.max_bin_error = std::max(report.max_bin_error, c.max_bin_error);
    report.cases.push_back(c);
  }
  return report;
}

std::string OracleReport::to_text() const {
  std::ostringstream os;
  char line[200];
  for (const auto &c : cases) {
    std::snprintf(line, sizeof line,
                  "seed %llu  snr %6.2f dB  t60 %.3f s  si_sdr_direct %7.2f dB  si_sdr_noise %7.2f dB  max_bin_err %.3e\n",
                  static_cast<unsigned long long>(c.seed), c.snr_db, c.t60, c.si_sdr_direct_db,
                  c.si_sdr_noise_db, c.max_bin_error);
    os << line;
  }
  if (cases.empty()) {
    os << "no mixtures requested\n";
  } else {
    std::snprintf(line, sizeof line, "mixtures %zu  min_si_sdr %.2f dB  max_bin_err %.3e\n", cases.size(),
                  min_si_sdr_db, max_bin_error);
    os << line;
  }
  return os.str();
}

std::string OracleReport::to_json() const {
  nlohmann::json j;
  j["cases"] = nlohmann::json::array();
  for (const auto &c : cases) {
    j["cases"].push_back({{"seed", c.seed},
                          {"snr_db", c.snr_db},
                          {"t60", c.t60},
                          {"si_sdr_direct_db", c.si_sdr_direct_db},
                          {"si_sdr_noise_db", c.si_sdr_noise_db},
                          {"max_bin_error", c.max_bin_error}});
  }
  j["min_si_sdr_db"] = min_si_sdr_db;
  j["max_bin_error"] = max_bin_error;
  return j.dump(2);
}

}  // namespace phm
