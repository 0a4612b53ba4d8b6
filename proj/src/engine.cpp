#include "phm/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phm/error.hpp"

namespace phm {

std::uint64_t OpTally::total() const {
  return std::accumulate(per_layer.begin(), per_layer.end(), std::uint64_t{0});
}

namespace {

std::uint64_t channel_product(const LayerShape &l) {
  return static_cast<std::uint64_t>(l.in_channels) * static_cast<std::uint64_t>(l.out_channels);
}

// Taps of a transposed temporal conv that land on output frame u.
std::uint64_t decoder_taps(int u, int kernel_t, int stride_t, int frames_in) {
  std::uint64_t taps = 0;
  for (int k = 0; k < kernel_t; ++k) {
    const int num = u - k;
    if (num >= 0 && num % stride_t == 0 && num / stride_t < frames_in) ++taps;
  }
  return taps;
}

double reduction(std::uint64_t naive, std::uint64_t streaming) {
  if (naive == 0) return 0.0;
  return 1.0 - static_cast<double>(streaming) / static_cast<double>(naive);
}

}  // namespace

OpCountReport count_ops(const UNetConfig &cfg) {
  cfg.validate();
  const auto geo = resolve_geometry(cfg);
  OpCountReport report;
  for (const auto &layer : geo.layers) {
    const std::uint64_t per_pair = frequency_pairs(layer) * channel_product(layer);
    LayerOpCount c{layer.name, 0, 0, 0.0};
    const auto kt = static_cast<std::uint64_t>(layer.kernel_t);
    switch (layer.kind) {
      case LayerKind::kEncoder:
        c.naive = static_cast<std::uint64_t>(layer.frames_out) * kt * per_pair;
        c.streaming = kt * per_pair;  // one new frame per push
        break;
      case LayerKind::kDecoder: {
        const int level = std::stoi(layer.name.substr(3));
        c.naive = static_cast<std::uint64_t>(layer.frames_in) * kt * per_pair;
        std::uint64_t taps = 0;
        for (int u : geo.cone_out[level - 1]) {
          taps += decoder_taps(u, layer.kernel_t, layer.stride_t, layer.frames_in);
        }
        c.streaming = taps * per_pair;
        break;
      }
      case LayerKind::kHead:
        c.naive = static_cast<std::uint64_t>(layer.frames_out) * per_pair;
        c.streaming = per_pair;
        break;
    }
    c.reduction = reduction(c.naive, c.streaming);
    report.naive_total += c.naive;
    report.streaming_total += c.streaming;
    report.layers.push_back(std::move(c));
  }
  report.overall_reduction = reduction(report.naive_total, report.streaming_total);
  return report;
}

std::uint64_t count_ops(const UNetConfig &cfg, CountMode mode) {
  const auto r = count_ops(cfg);
  return mode == CountMode::kNaive ? r.naive_total : r.streaming_total;
}

std::string OpCountReport::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %16s %16s %10s\n", "layer", "naive_mults", "stream_mults",
                "reduction");
  os << line;
  for (const auto &l : layers) {
    std::snprintf(line, sizeof line, "%-8s %16llu %16llu %9.2f%%\n", l.name.c_str(),
                  static_cast<unsigned long long>(l.naive),
                  static_cast<unsigned long long>(l.streaming), 100.0 * l.reduction);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-8s %16llu %16llu %9.2f%%\n", "total",
                static_cast<unsigned long long>(naive_total),
                static_cast<unsigned long long>(streaming_total), 100.0 * overall_reduction);
  os << line;
  return os.str();
}

std::string OpCountReport::to_json() const {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const auto &l : layers) {
    j["layers"].push_back(
        {{"name", l.name}, {"naive_mults", l.naive}, {"streaming_mults", l.streaming}, {"reduction", l.reduction}});
  }
  j["naive_total"] = naive_total;
  j["streaming_total"] = streaming_total;
  j["overall_reduction"] = overall_reduction;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Network

template <typename Real>
Network<Real>::Network(UNetConfig cfg, const WeightSet &weights) : cfg_(std::move(cfg)) {
  cfg_.validate();
  weights.check_shapes(cfg_);
  geo_ = resolve_geometry(cfg_);
  for (const auto &layer : geo_.layers) {
    Params p;
    const auto &w = weights.at(layer.name + ".weight").values;
    const auto &b = weights.at(layer.name + ".bias").values;
    p.weight.assign(w.begin(), w.end());
    p.bias.assign(b.begin(), b.end());
    params_.push_back(std::move(p));
  }
}

template <typename Real>
std::size_t Network<Real>::input_frame_size() const {
  return static_cast<std::size_t>(geo_.bins[0]) * static_cast<std::size_t>(geo_.channels[0]);
}

template <typename Real>
std::size_t Network<Real>::output_frame_size() const {
  return static_cast<std::size_t>(geo_.bins[0]) * kHeadChannels;
}

// out = bias + sum over temporal taps of frequency-valid 1-D convolutions.
// inputs[k] is the frame for temporal tap k, or nullptr when absent.
template <typename Real>
void Network<Real>::run_conv(const LayerShape &shape, const Params &p,
                             std::span<const Real *const> inputs, Real *out) const {
  const int cin = shape.in_channels, cout = shape.out_channels;
  const bool transposed = shape.kind == LayerKind::kDecoder;
  const int coarse = transposed ? shape.f_in : shape.f_out;
  const int fine = transposed ? shape.f_out : shape.f_in;
  const int out_bins = shape.f_out;
  for (int f = 0; f < out_bins; ++f) {
    std::copy(p.bias.begin(), p.bias.end(), out + static_cast<std::ptrdiff_t>(f) * cout);
  }
  for (int kt = 0; kt < shape.kernel_t; ++kt) {
    const Real *in = inputs[kt];
    if (in == nullptr) continue;
    for (int f = 0; f < coarse; ++f) {
      for (int kf = 0; kf < shape.kernel_f; ++kf) {
        const int g = f * shape.stride_f + kf - shape.pad_f;
        if (g < 0 || g >= fine) continue;
        const Real *w = p.weight.data() + (static_cast<std::ptrdiff_t>(kt) * shape.kernel_f + kf) * cin * cout;
        const int src = transposed ? f : g;
        const int dst = transposed ? g : f;
        const Real *__restrict x = in + static_cast<std::ptrdiff_t>(src) * cin;
        Real *__restrict o = out + static_cast<std::ptrdiff_t>(dst) * cout;
        for (int ci = 0; ci < cin; ++ci) {
          const Real xv = x[ci];
          const Real *__restrict wr = w + static_cast<std::ptrdiff_t>(ci) * cout;
          for (int co = 0; co < cout; ++co) o[co] += xv * wr[co];
        }
      }
    }
  }
  if (shape.activation) {
    const Real slope = static_cast<Real>(cfg_.leaky_slope);
    const std::size_t n = static_cast<std::size_t>(out_bins) * cout;
    for (std::size_t i = 0; i < n; ++i) {
      if (out[i] < Real(0)) out[i] *= slope;
    }
  }
}

template <typename Real>
void Network<Real>::encoder_frame(int level, std::span<const Real *const> inputs, Real *out,
                                  OpTally *tally) const {
  const auto idx = layer_index_encoder(level);
  const auto &shape = geo_.layers[idx];
  run_conv(shape, params_[idx], inputs, out);
  if (tally) {
    std::uint64_t present = 0;
    for (int k = 0; k < shape.kernel_t; ++k) present += inputs[k] != nullptr;
    tally->add(idx, present * frequency_pairs(shape) * channel_product(shape));
  }
}

template <typename Real>
void Network<Real>::decoder_frame(int level, int u, int frames_in, const Real *const *inputs_by_frame,
                                  Real *out, OpTally *tally) const {
  const auto idx = layer_index_decoder(level);
  const auto &shape = geo_.layers[idx];
  // Gather the decoder inputs that scatter onto frame u, one per temporal tap.
  const Real *taps[64];
  if (shape.kernel_t > 64) throw Error("unet: kernel_t above 64 is not supported");
  std::uint64_t present = 0;
  for (int k = 0; k < shape.kernel_t; ++k) {
    taps[k] = nullptr;
    const int num = u - k;
    if (num < 0 || num % shape.stride_t != 0) continue;
    const int i = num / shape.stride_t;
    if (i >= frames_in) continue;
    taps[k] = inputs_by_frame[i];
    if (taps[k] == nullptr) throw Error("unet: decoder input frame missing from cone");
    ++present;
  }
  run_conv(shape, params_[idx], std::span<const Real *const>(taps, shape.kernel_t), out);
  if (tally) tally->add(idx, present * frequency_pairs(shape) * channel_product(shape));
}

template <typename Real>
void Network<Real>::head_frame(const Real *in, Real *out, OpTally *tally) const {
  const auto idx = layer_index_head();
  const auto &shape = geo_.layers[idx];
  const Real *inputs[1] = {in};
  run_conv(shape, params_[idx], std::span<const Real *const>(inputs, 1), out);
  if (tally) tally->add(idx, frequency_pairs(shape) * channel_product(shape));
}

template <typename Real>
std::vector<Real> Network<Real>::naive_infer(std::span<const Real> window, OpTally *tally) const {
  const int L = geo_.depth;
  const std::size_t expected = static_cast<std::size_t>(geo_.frames) * input_frame_size();
  if (window.size() != expected) {
    throw Error("naive_infer: shape mismatch (" + std::to_string(window.size()) + " values, expected " +
                std::to_string(expected) + ")");
  }
  if (tally && tally->per_layer.size() != geo_.layers.size()) *tally = OpTally(geo_.layers.size());
  auto frame_size = [&](int level) {
    return static_cast<std::size_t>(geo_.bins[level]) * static_cast<std::size_t>(geo_.channels[level]);
  };

  std::vector<std::vector<Real>> enc(L + 1);
  enc[0].assign(window.begin(), window.end());
  std::vector<const Real *> ptrs;
  for (int l = 1; l <= L; ++l) {
    const auto &e = cfg_.encoder[l - 1];
    const std::size_t fs_in = frame_size(l - 1), fs_out = frame_size(l);
    enc[l].assign(static_cast<std::size_t>(geo_.enc_frames[l]) * fs_out, Real(0));
    ptrs.resize(e.kernel_t);
    for (int j = 0; j < geo_.enc_frames[l]; ++j) {
      for (int k = 0; k < e.kernel_t; ++k) {
        ptrs[k] = enc[l - 1].data() + static_cast<std::size_t>(j * e.stride_t + k) * fs_in;
      }
      encoder_frame(l, ptrs, enc[l].data() + static_cast<std::size_t>(j) * fs_out, tally);
    }
  }

  // Decoder: D_L = E_L, U_l = tconv_l(D_l), D_{l-1} = [U_l | E_{l-1}].
  std::vector<Real> d = enc[L];
  std::size_t d_frame = frame_size(L);
  std::vector<Real> u_out;
  for (int l = L; l >= 1; --l) {
    const auto &shape = geo_.layers[layer_index_decoder(l)];
    const int frames_in = geo_.dec_frames[l], frames_out = geo_.dec_frames[l - 1];
    const std::size_t u_frame = static_cast<std::size_t>(shape.f_out) * shape.out_channels;
    std::vector<const Real *> by_frame(frames_in);
    for (int i = 0; i < frames_in; ++i) by_frame[i] = d.data() + static_cast<std::size_t>(i) * d_frame;
    u_out.assign(static_cast<std::size_t>(frames_out) * u_frame, Real(0));
    for (int u = 0; u < frames_out; ++u) {
      decoder_frame(l, u, frames_in, by_frame.data(), u_out.data() + static_cast<std::size_t>(u) * u_frame,
                    tally);
    }
    if (l >= 2) {
      const int cu = shape.out_channels, ce = geo_.channels[l - 1], bins = geo_.bins[l - 1];
      d_frame = static_cast<std::size_t>(bins) * (cu + ce);
      d.assign(static_cast<std::size_t>(frames_out) * d_frame, Real(0));
      for (int u = 0; u < frames_out; ++u) {
        Real *dst = d.data() + static_cast<std::size_t>(u) * d_frame;
        const Real *us = u_out.data() + static_cast<std::size_t>(u) * u_frame;
        const Real *es = enc[l - 1].data() + static_cast<std::size_t>(u) * frame_size(l - 1);
        for (int f = 0; f < bins; ++f) {
          std::copy(us + f * cu, us + (f + 1) * cu, dst + f * (cu + ce));
          std::copy(es + f * ce, es + (f + 1) * ce, dst + f * (cu + ce) + cu);
        }
      }
    }
  }

  const std::size_t u_frame = static_cast<std::size_t>(geo_.bins[0]) * cfg_.decoder_out_channels;
  std::vector<Real> head(output_frame_size()), result;
  for (int u = 0; u < geo_.dec_frames[0]; ++u) {
    head_frame(u_out.data() + static_cast<std::size_t>(u) * u_frame, head.data(), tally);
    if (u == geo_.target) result = head;
  }
  return result;
}

// ---------------------------------------------------------------------------
// StreamState

template <typename Real>
StreamState<Real>::StreamState(const Network<Real> &net) : net_(&net) {
  const auto &geo = net.geometry();
  const auto &cfg = net.config();
  const int L = geo.depth;
  capacity_.assign(L + 1, 1);
  frame_size_.assign(L + 1, 0);
  for (int l = 0; l <= L; ++l) {
    frame_size_[l] = static_cast<std::size_t>(geo.bins[l]) * geo.channels[l];
    std::size_t cap = 1;
    if (l < L) cap = std::max<std::size_t>(cap, static_cast<std::size_t>((cfg.encoder[l].kernel_t - 1) * geo.phase[l] + 1));
    if (l >= 1 && !geo.cone_in[l].empty()) {
      const int oldest = geo.frames - geo.receptive[l] - geo.cone_in[l].front() * geo.phase[l] + 1;
      cap = std::max<std::size_t>(cap, static_cast<std::size_t>(oldest));
    }
    capacity_[l] = cap;
  }
  rings_.resize(L + 1);
  for (int l = 0; l <= L; ++l) rings_[l].assign(capacity_[l] * frame_size_[l], Real(0));
  cone_buffers_.resize(L + 1);
  warmup_ = static_cast<std::uint64_t>(geo.frames - geo.earliest_input);
  total_ops_ = OpTally(geo.layers.size());
  push_ops_ = OpTally(geo.layers.size());
}

template <typename Real>
void StreamState<Real>::reset() {
  for (auto &r : rings_) std::fill(r.begin(), r.end(), Real(0));
  ingested_ = 0;
  total_ops_.clear();
  push_ops_.clear();
}

template <typename Real>
std::uint64_t StreamState<Real>::expected_emissions(std::uint64_t pushes) const {
  return pushes >= warmup_ ? pushes - warmup_ + 1 : 0;
}

template <typename Real>
std::uint64_t StreamState<Real>::queue_phases(int depth) const {
  return required_queues(net_->config(), depth);
}

template <typename Real>
Real *StreamState<Real>::slot(int level, std::int64_t frame) {
  const auto cap = static_cast<std::int64_t>(capacity_[level]);
  return rings_[level].data() + static_cast<std::size_t>(frame % cap) * frame_size_[level];
}

template <typename Real>
std::optional<std::vector<Real>> StreamState<Real>::push(std::span<const Real> frame) {
  const auto &geo = net_->geometry();
  const auto &cfg = net_->config();
  const int L = geo.depth;
  if (frame.size() != frame_size_[0]) throw Error("stream_push: frame size mismatch");
  push_ops_.clear();
  const auto n = static_cast<std::int64_t>(ingested_);
  std::copy(frame.begin(), frame.end(), slot(0, n));

  // Encoder: every depth produces the frame whose receptive field just closed.
  std::vector<const Real *> ptrs;
  for (int l = 1; l <= L; ++l) {
    const std::int64_t a = n - geo.receptive[l] + 1;
    if (a < 0) continue;
    const auto &e = cfg.encoder[l - 1];
    ptrs.resize(e.kernel_t);
    for (int k = 0; k < e.kernel_t; ++k) ptrs[k] = slot(l - 1, a + static_cast<std::int64_t>(k) * geo.phase[l - 1]);
    net_->encoder_frame(l, ptrs, slot(l, a), &push_ops_);
  }
  ++ingested_;

  if (ingested_ < warmup_) {
    for (std::size_t i = 0; i < push_ops_.per_layer.size(); ++i) total_ops_.per_layer[i] += push_ops_.per_layer[i];
    return std::nullopt;
  }

  // Decoder cone for the window [s, n].
  const std::int64_t s = n - geo.frames + 1;
  std::vector<const Real *> by_frame;
  by_frame.assign(geo.dec_frames[L], nullptr);
  for (int i : geo.cone_in[L]) by_frame[i] = slot(L, s + static_cast<std::int64_t>(i) * geo.phase[L]);
  for (int l = L; l >= 1; --l) {
    const auto &shape = geo.layers[net_->layer_index_decoder(l)];
    const auto &outs = geo.cone_out[l - 1];
    const std::size_t u_frame = static_cast<std::size_t>(shape.f_out) * shape.out_channels;
    u_buffer_.assign(outs.size() * u_frame, Real(0));
    for (std::size_t j = 0; j < outs.size(); ++j) {
      net_->decoder_frame(l, outs[j], geo.dec_frames[l], by_frame.data(), u_buffer_.data() + j * u_frame,
                          &push_ops_);
    }
    if (l == 1) break;
    // D_{l-1} = [U_l | E_{l-1}] at the cone frames.
    const int cu = shape.out_channels, ce = geo.channels[l - 1], bins = geo.bins[l - 1];
    const std::size_t d_frame = static_cast<std::size_t>(bins) * (cu + ce);
    auto &buf = cone_buffers_[l - 1];
    buf.assign(outs.size() * d_frame, Real(0));
    by_frame.assign(geo.dec_frames[l - 1], nullptr);
    for (std::size_t j = 0; j < outs.size(); ++j) {
      Real *dst = buf.data() + j * d_frame;
      const Real *us = u_buffer_.data() + j * u_frame;
      const Real *es = slot(l - 1, s + static_cast<std::int64_t>(outs[j]) * geo.phase[l - 1]);
      for (int f = 0; f < bins; ++f) {
        std::copy(us + f * cu, us + (f + 1) * cu, dst + f * (cu + ce));
        std::copy(es + f * ce, es + (f + 1) * ce, dst + f * (cu + ce) + cu);
      }
      by_frame[outs[j]] = dst;
    }
  }
  std::vector<Real> head(net_->output_frame_size());
  net_->head_frame(u_buffer_.data(), head.data(), &push_ops_);
  for (std::size_t i = 0; i < push_ops_.per_layer.size(); ++i) total_ops_.per_layer[i] += push_ops_.per_layer[i];
  return head;
}

template class Network<float>;
template class Network<double>;
template class StreamState<float>;
template class StreamState<double>;

// ---------------------------------------------------------------------------

template <typename Real>
std::vector<Real> pack_frame(const FeatureStack &features, std::int64_t t) {
  const std::size_t bins = features.bins();
  std::vector<Real> out(bins * kFeatureChannels, Real(0));
  if (t < 0 || t >= static_cast<std::int64_t>(features.frames())) return out;
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t c = 0; c < kFeatureChannels; ++c) {
      out[f * kFeatureChannels + c] = static_cast<Real>(features.channels[c](static_cast<std::size_t>(t), f));
    }
  }
  return out;
}

template <typename Real>
std::vector<Real> pack_window(const FeatureStack &features, std::int64_t start, std::size_t count) {
  std::vector<Real> out;
  out.reserve(count * features.bins() * kFeatureChannels);
  for (std::size_t i = 0; i < count; ++i) {
    auto frame = pack_frame<Real>(features, start + static_cast<std::int64_t>(i));
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

template <typename Real>
void unpack_head(std::span<const Real> head, std::size_t t, MaskLogits &direct, MaskLogits &noise) {
  const std::size_t bins = direct.bins();
  if (head.size() != bins * kHeadChannels || noise.bins() != bins) throw Error("unpack_head: shape mismatch");
  for (std::size_t f = 0; f < bins; ++f) {
    const Real *h = head.data() + f * kHeadChannels;
    MaskLogits *pairs[2] = {&direct, &noise};
    for (int p = 0; p < 2; ++p) {
      const Real *v = h + 5 * p;
      pairs[p]->z_k(t, f) = static_cast<double>(v[0]);
      pairs[p]->z_notk(t, f) = static_cast<double>(v[1]);
      pairs[p]->beta_logit(t, f) = static_cast<double>(v[2]);
      pairs[p]->q0(t, f) = static_cast<double>(v[3]);
      pairs[p]->q1(t, f) = static_cast<double>(v[4]);
    }
  }
}

template std::vector<float> pack_frame<float>(const FeatureStack &, std::int64_t);
template std::vector<double> pack_frame<double>(const FeatureStack &, std::int64_t);
template std::vector<float> pack_window<float>(const FeatureStack &, std::int64_t, std::size_t);
template std::vector<double> pack_window<double>(const FeatureStack &, std::int64_t, std::size_t);
template void unpack_head<float>(std::span<const float>, std::size_t, MaskLogits &, MaskLogits &);
template void unpack_head<double>(std::span<const double>, std::size_t, MaskLogits &, MaskLogits &);

}  // namespace phm
