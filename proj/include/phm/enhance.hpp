#pragma once

#include <optional>

#include "phm/compressor.hpp"
#include "phm/engine.hpp"
#include "phm/mask.hpp"
#include "phm/signal.hpp"
#include "phm/stft.hpp"
#include "phm/unet.hpp"
#include "phm/weights.hpp"

namespace phm {

enum class InferenceMode { kCausalStream, kNoncausalWindow };
enum class Precision { kFloat, kDouble };

struct EnhanceOptions {
  StftConfig stft = StftConfig::realtime();
  InferenceMode mode = InferenceMode::kCausalStream;
  Precision precision = Precision::kFloat;
  double reverb_gain_db = -15.0;
  GumbelConfig gumbel{};
  std::optional<DrcConfig> drc;
};

struct EnhanceResult {
  SignalBuffer direct, reverb, noise;
  SignalBuffer output;      // remix, then optional compression
  OpCountReport ops;        // analytic counts for the configuration
  OpTally measured;         // multiplications actually executed
  std::size_t frames = 0;   // STFT frames processed
};

/// Per-frame network logits for the direct and noise mask pairs. Frames
/// outside the signal are zero in both modes, so the two agree.
std::pair<MaskLogits, MaskLogits> infer_logits(const FeatureStack &features, const UNetConfig &cfg,
                                               const WeightSet &weights, InferenceMode mode,
                                               Precision precision, OpTally *measured = nullptr);

EnhanceResult enhance(const SignalBuffer &signal, const WeightSet &weights, const UNetConfig &cfg,
                      const EnhanceOptions &options = {});

/// Resynthesizes a full-band spectrogram and pads or truncates to n samples.
SignalBuffer synthesize(const ComplexSpectrogram &full, const StftConfig &cfg, std::size_t n);

}  // namespace phm
