#include "phm/unet.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "phm/error.hpp"

namespace phm {

UNetConfig UNetConfig::reference(const StftConfig &stft) {
  UNetConfig cfg;
  const int strides_t[] = {1, 2, 1, 2, 1};
  const int channels[] = {16, 32, 48, 64, 80};
  for (int l = 0; l < 5; ++l) {
    cfg.encoder.push_back({5, 3, 2, strides_t[l], channels[l]});
  }
  cfg.input_bins = static_cast<int>(stft.model_bins());
  cfg.hop_size = static_cast<int>(stft.hop_size);
  return cfg;
}

int UNetConfig::lookahead_frames() const {
  const double hop_ms = static_cast<double>(hop_size) * 1000.0 / 16000.0;
  return static_cast<int>(std::lround(lookahead_ms / hop_ms));
}

namespace {

void check_fields(const UNetConfig &cfg) {
  const auto &encoder = cfg.encoder;
  if (encoder.empty()) throw Error("unet: encoder must have at least one layer");
  if (cfg.input_bins < 1 || cfg.input_channels < 1 || cfg.frames < 1 || cfg.hop_size < 1) {
    throw Error("unet: input shape must be positive");
  }
  if (cfg.decoder_out_channels < 1) throw Error("unet: decoder_out_channels must be positive");
  if (cfg.lookahead_ms < 0.0) throw Error("unet: negative lookahead");
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    const auto &e = encoder[l];
    if (e.kernel_f < 1 || e.kernel_t < 1 || e.stride_f < 1 || e.stride_t < 1 || e.out_channels < 1) {
      throw Error("unet: encoder layer " + std::to_string(l + 1) + " has non-positive parameters");
    }
  }
  if (cfg.lookahead_frames() >= cfg.frames) throw Error("unet: lookahead exceeds context window");
}

LayerShape make_layer(std::string name, LayerKind kind, const EncoderLayerSpec &spec, int cin,
                      int cout, int f_in, int f_out, int pad, int t_in, int t_out, bool act) {
  return LayerShape{std::move(name), kind, spec.kernel_f, spec.kernel_t, spec.stride_f,
                    spec.stride_t, cin, cout, f_in, f_out, pad, t_in, t_out, act};
}

}  // namespace

void UNetConfig::validate() const { resolve_geometry(*this); }

UNetGeometry resolve_geometry(const UNetConfig &cfg) {
  check_fields(cfg);
  UNetGeometry g;
  const int L = cfg.depth();
  g.depth = L;
  g.frames = cfg.frames;
  g.target = cfg.target_frame();
  g.enc_frames.assign(L + 1, 0);
  g.dec_frames.assign(L + 1, 0);
  g.bins.assign(L + 1, 0);
  g.channels.assign(L + 1, 0);
  g.phase.assign(L + 1, 1);
  g.receptive.assign(L + 1, 1);
  g.enc_frames[0] = cfg.frames;
  g.bins[0] = cfg.input_bins;
  g.channels[0] = cfg.input_channels;
  std::vector<int> pads(L + 1, 0);
  for (int l = 1; l <= L; ++l) {
    const auto &e = cfg.encoder[l - 1];
    if (g.enc_frames[l - 1] < e.kernel_t) {
      throw Error("unet: encoder layer " + std::to_string(l) + " has no valid output frames");
    }
    g.enc_frames[l] = (g.enc_frames[l - 1] - e.kernel_t) / e.stride_t + 1;
    g.bins[l] = (g.bins[l - 1] + e.stride_f - 1) / e.stride_f;
    pads[l] = std::max(0, (g.bins[l] - 1) * e.stride_f + e.kernel_f - g.bins[l - 1]) / 2;
    g.channels[l] = e.out_channels;
    g.receptive[l] = g.receptive[l - 1] + (e.kernel_t - 1) * g.phase[l - 1];
    g.phase[l] = g.phase[l - 1] * e.stride_t;
  }
  g.dec_frames[L] = g.enc_frames[L];
  for (int l = L; l >= 1; --l) {
    const auto &e = cfg.encoder[l - 1];
    g.dec_frames[l - 1] = (g.dec_frames[l] - 1) * e.stride_t + e.kernel_t;
  }
  if (g.target < 0 || g.target >= g.dec_frames[0]) {
    throw Error("unet: target frame " + std::to_string(g.target) +
                " is outside the decoder output (" + std::to_string(g.dec_frames[0]) + " frames)");
  }

  // Dependency cone of the single emitted frame, walked from the head down.
  g.cone_out.assign(L + 1, {});
  g.cone_in.assign(L + 1, {});
  g.cone_out[0] = {g.target};
  for (int l = 1; l <= L; ++l) {
    const auto &e = cfg.encoder[l - 1];
    std::set<int> inputs;
    for (int u : g.cone_out[l - 1]) {
      for (int k = 0; k < e.kernel_t; ++k) {
        const int num = u - k;
        if (num < 0 || num % e.stride_t != 0) continue;
        const int i = num / e.stride_t;
        if (i < g.dec_frames[l]) inputs.insert(i);
      }
    }
    g.cone_in[l].assign(inputs.begin(), inputs.end());
    if (l < L) g.cone_out[l] = g.cone_in[l];
  }
  g.earliest_input = cfg.frames;
  for (int l = 1; l <= L; ++l) {
    if (!g.cone_in[l].empty()) {
      g.earliest_input = std::min(g.earliest_input, g.cone_in[l].front() * g.phase[l]);
    }
  }

  for (int l = 1; l <= L; ++l) {
    g.layers.push_back(make_layer("enc" + std::to_string(l), LayerKind::kEncoder,
                                  cfg.encoder[l - 1], g.channels[l - 1], g.channels[l],
                                  g.bins[l - 1], g.bins[l], pads[l], g.enc_frames[l - 1],
                                  g.enc_frames[l], true));
  }
  for (int l = L; l >= 1; --l) {
    const int cin = l == L ? g.channels[L] : 2 * g.channels[l];
    const int cout = l >= 2 ? g.channels[l - 1] : cfg.decoder_out_channels;
    g.layers.push_back(make_layer("dec" + std::to_string(l), LayerKind::kDecoder,
                                  cfg.encoder[l - 1], cin, cout, g.bins[l], g.bins[l - 1], pads[l],
                                  g.dec_frames[l], g.dec_frames[l - 1], true));
  }
  g.layers.push_back(LayerShape{"head", LayerKind::kHead, 1, 1, 1, 1, cfg.decoder_out_channels,
                                kHeadChannels, g.bins[0], g.bins[0], 0, g.dec_frames[0],
                                g.dec_frames[0], false});
  return g;
}

std::uint64_t required_queues(const UNetConfig &cfg, int depth) {
  if (depth < 1 || depth > cfg.depth()) {
    throw Error("required_queues: depth " + std::to_string(depth) + " out of range [1, " +
                std::to_string(cfg.depth()) + "]");
  }
  std::uint64_t q = 1;
  for (int l = 0; l < depth; ++l) q *= static_cast<std::uint64_t>(cfg.encoder[l].stride_t);
  return q;
}

std::uint64_t frequency_pairs(const LayerShape &layer) {
  // Encoder: output f reads fine bins f*s + k - pad. Decoder: the transpose,
  // so the coarse side is its input.
  const bool decoder = layer.kind == LayerKind::kDecoder;
  const int coarse = decoder ? layer.f_in : layer.f_out;
  const int fine = decoder ? layer.f_out : layer.f_in;
  std::uint64_t pairs = 0;
  for (int f = 0; f < coarse; ++f) {
    const int first = f * layer.stride_f - layer.pad_f;
    const int lo = std::max(0, -first);
    const int hi = std::min(layer.kernel_f, fine - first);
    if (hi > lo) pairs += static_cast<std::uint64_t>(hi - lo);
  }
  return pairs;
}

}  // namespace phm
