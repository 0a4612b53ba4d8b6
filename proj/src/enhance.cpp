#include "phm/enhance.hpp"

#include "phm/error.hpp"
#include "phm/features.hpp"

namespace phm {

namespace {

template <typename Real>
void run_network(const FeatureStack &features, const UNetConfig &cfg, const WeightSet &weights,
                 InferenceMode mode, MaskLogits &direct, MaskLogits &noise, OpTally *measured) {
  const Network<Real> net(cfg, weights);
  const auto &geo = net.geometry();
  const auto frames = static_cast<std::int64_t>(features.frames());
  OpTally tally(geo.layers.size());

  if (mode == InferenceMode::kNoncausalWindow) {
    for (std::int64_t t = 0; t < frames; ++t) {
      const auto window = pack_window<Real>(features, t - geo.target, static_cast<std::size_t>(geo.frames));
      const auto head = net.naive_infer(window, &tally);
      unpack_head<Real>(head, static_cast<std::size_t>(t), direct, noise);
    }
  } else {
    // Pushing zero frames before and after the signal makes the stream see
    // the same zero-padded windows as the windowed backend.
    StreamState<Real> state(net);
    const std::int64_t lead = geo.target;
    const std::int64_t lookahead = geo.frames - 1 - geo.target;
    for (std::int64_t v = 0; v < frames + lead + lookahead; ++v) {
      const auto out = state.push(pack_frame<Real>(features, v - lead));
      const std::int64_t t = v - geo.frames + 1;
      if (out && t >= 0) unpack_head<Real>(*out, static_cast<std::size_t>(t), direct, noise);
    }
    tally = state.ops();
  }
  if (measured) *measured = std::move(tally);
}

}  // namespace

std::pair<MaskLogits, MaskLogits> infer_logits(const FeatureStack &features, const UNetConfig &cfg,
                                               const WeightSet &weights, InferenceMode mode,
                                               Precision precision, OpTally *measured) {
  if (features.bins() != static_cast<std::size_t>(cfg.input_bins)) {
    throw Error("enhance: feature bins (" + std::to_string(features.bins()) +
                ") do not match the network input (" + std::to_string(cfg.input_bins) + ")");
  }
  if (cfg.input_channels != static_cast<int>(kFeatureChannels)) {
    throw Error("enhance: network must take " + std::to_string(kFeatureChannels) + " input channels");
  }
  MaskLogits direct(features.frames(), features.bins()), noise(features.frames(), features.bins());
  if (precision == Precision::kFloat) {
    run_network<float>(features, cfg, weights, mode, direct, noise, measured);
  } else {
    run_network<double>(features, cfg, weights, mode, direct, noise, measured);
  }
  return {std::move(direct), std::move(noise)};
}

SignalBuffer synthesize(const ComplexSpectrogram &full, const StftConfig &cfg, std::size_t n) {
  auto y = istft(full, cfg).samples();
  y.resize(n, 0.0);
  return SignalBuffer(std::move(y));
}

EnhanceResult enhance(const SignalBuffer &signal, const WeightSet &weights, const UNetConfig &cfg,
                      const EnhanceOptions &options) {
  options.stft.validate();
  if (static_cast<std::size_t>(cfg.hop_size) != options.stft.hop_size) {
    throw Error("enhance: network hop_size does not match the STFT preset");
  }
  const auto full = stft(signal, options.stft);
  const auto x = trim_low_bins(full, options.stft.discard_low_bins);
  const auto features = extract_features(x, options.stft);

  EnhanceResult result;
  auto [logits_d, logits_n] =
      infer_logits(features, cfg, weights, options.mode, options.precision, &result.measured);
  const auto field_d = assemble_masks(logits_d, options.gumbel);
  const auto field_n = assemble_masks(logits_n, options.gumbel);
  const auto parts = quadrangle_decompose(x, field_d, field_n);

  // The trimmed low band is not masked; it passes through with the direct part.
  auto direct = restore_low_bins(parts.direct, options.stft.discard_low_bins);
  for (std::size_t t = 0; t < full.frames(); ++t) {
    for (std::size_t f = 0; f < options.stft.discard_low_bins; ++f) direct(t, f) = full(t, f);
  }
  const std::size_t n = signal.size();
  result.direct = synthesize(direct, options.stft, n);
  result.reverb = synthesize(restore_low_bins(parts.reverb, options.stft.discard_low_bins), options.stft, n);
  result.noise = synthesize(restore_low_bins(parts.noise, options.stft.discard_low_bins), options.stft, n);
  result.output = remix(result.direct, result.reverb, options.reverb_gain_db);
  if (options.drc) result.output = compress(result.output, *options.drc);
  result.ops = count_ops(cfg);
  result.frames = full.frames();
  return result;
}

}  // namespace phm
