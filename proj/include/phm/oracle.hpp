#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phm/simkit.hpp"
#include "phm/stft.hpp"

namespace phm {

struct OracleCase {
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  double t60 = 0.0;
  double si_sdr_direct_db = 0.0;
  double si_sdr_noise_db = 0.0;
  double max_bin_error = 0.0;  // max |Y_hat - Y| / |X| over bins with |X| > 1e-6
};

struct OracleReport {
  std::vector<OracleCase> cases;
  double min_si_sdr_db = 0.0;
  double max_bin_error = 0.0;

  std::string to_text() const;
  std::string to_json() const;
};

/// Reconstructs one simulated mixture with ideal mask logits recovered from
/// its components. SI-SDR is measured away from the first and last window,
/// where the analysis window does not cover the signal.
OracleCase oracle_reconstruct(const MixtureTruth &truth, const StftConfig &cfg);

/// Scenarios seed, seed + 1, ..., seed + count - 1 on the full-band
/// real-time STFT.
OracleReport run_oracle_check(std::uint64_t seed, std::size_t count);

}  // namespace phm
