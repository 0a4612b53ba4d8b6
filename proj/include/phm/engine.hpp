#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phm/features.hpp"
#include "phm/mask.hpp"
#include "phm/unet.hpp"
#include "phm/weights.hpp"

namespace phm {

/// Multiplications per layer, indexed like UNetGeometry::layers.
struct OpTally {
  std::vector<std::uint64_t> per_layer;

  explicit OpTally(std::size_t layers = 0) : per_layer(layers, 0) {}
  void add(std::size_t layer, std::uint64_t n) { per_layer[layer] += n; }
  void clear() { std::fill(per_layer.begin(), per_layer.end(), 0); }
  std::uint64_t total() const;
};

struct LayerOpCount {
  std::string name;
  std::uint64_t naive = 0;      // one full window
  std::uint64_t streaming = 0;  // one steady-state push
  double reduction = 0.0;       // 1 - streaming / naive
};

struct OpCountReport {
  std::vector<LayerOpCount> layers;
  std::uint64_t naive_total = 0;
  std::uint64_t streaming_total = 0;
  double overall_reduction = 0.0;

  std::string to_text() const;
  std::string to_json() const;
};

enum class CountMode { kNaive, kStreaming };

/// Closed-form multiplication counts per layer for both backends.
OpCountReport count_ops(const UNetConfig &cfg);
std::uint64_t count_ops(const UNetConfig &cfg, CountMode mode);

/// Immutable network: configuration plus weights converted to Real.
/// Frames are laid out bins x channels with the channel index fastest.
template <typename Real>
class Network {
 public:
  Network(UNetConfig cfg, const WeightSet &weights);

  const UNetConfig &config() const { return cfg_; }
  const UNetGeometry &geometry() const { return geo_; }
  std::size_t input_frame_size() const;
  std::size_t output_frame_size() const;  // bins x kHeadChannels

  /// Full forward pass over a frames x bins x channels window; returns the
  /// head output of the target frame (frames - 1 - lookahead).
  std::vector<Real> naive_infer(std::span<const Real> window, OpTally *tally = nullptr) const;

  // Single-frame building blocks shared by both backends.
  void encoder_frame(int level, std::span<const Real *const> inputs, Real *out, OpTally *tally) const;
  void decoder_frame(int level, int u, int frames_in, const Real *const *inputs_by_frame, Real *out,
                     OpTally *tally) const;
  void head_frame(const Real *in, Real *out, OpTally *tally) const;

  std::size_t layer_index_encoder(int level) const { return static_cast<std::size_t>(level - 1); }
  std::size_t layer_index_decoder(int level) const {
    return static_cast<std::size_t>(2 * geo_.depth - level);
  }
  std::size_t layer_index_head() const { return static_cast<std::size_t>(2 * geo_.depth); }

 private:
  struct Params {
    std::vector<Real> weight;  // [kt][kf][cin][cout]
    std::vector<Real> bias;
  };
  void run_conv(const LayerShape &shape, const Params &p, std::span<const Real *const> inputs,
                Real *out) const;

  UNetConfig cfg_;
  UNetGeometry geo_;
  std::vector<Params> params_;  // same order as geo_.layers
};

/// Incremental inference state for one stream. Each encoder depth keeps a
/// ring buffer of frames computed at every input offset, which is
/// equivalent to prod(s_l) phase queues; the decoder evaluates only the
/// dependency cone of the emitted frame. The network must outlive the state.
template <typename Real>
class StreamState {
 public:
  explicit StreamState(const Network<Real> &net);

  /// Ingests one input frame; returns the head output for input frame
  /// (n - lookahead) once enough context has arrived.
  std::optional<std::vector<Real>> push(std::span<const Real> frame);

  std::uint64_t frames_ingested() const { return ingested_; }
  /// Number of pushes up to and including the first emission.
  std::uint64_t warmup() const { return warmup_; }
  /// Emissions after `pushes` frames: max(0, pushes - warmup + 1).
  std::uint64_t expected_emissions(std::uint64_t pushes) const;
  std::uint64_t queue_phases(int depth) const;
  std::size_t buffer_capacity(int level) const { return capacity_[level]; }

  const OpTally &ops() const { return total_ops_; }
  const OpTally &last_push_ops() const { return push_ops_; }
  void reset();

 private:
  Real *slot(int level, std::int64_t frame);

  const Network<Real> *net_;
  std::vector<std::size_t> capacity_;
  std::vector<std::size_t> frame_size_;
  std::vector<std::vector<Real>> rings_;
  std::vector<std::vector<Real>> cone_buffers_;  // D_l frames for the current cone
  std::vector<Real> u_buffer_;
  std::uint64_t ingested_ = 0;
  std::uint64_t warmup_ = 0;
  OpTally total_ops_;
  OpTally push_ops_;
};

extern template class Network<float>;
extern template class Network<double>;
extern template class StreamState<float>;
extern template class StreamState<double>;

/// Packs feature frame t into bins x channels; frames outside [0, T) are zero.
template <typename Real>
std::vector<Real> pack_frame(const FeatureStack &features, std::int64_t t);
/// Packs frames [start, start + count), zero-padding out-of-range frames.
template <typename Real>
std::vector<Real> pack_window(const FeatureStack &features, std::int64_t start, std::size_t count);

/// Writes one head frame into row t of the direct and noise logit grids.
template <typename Real>
void unpack_head(std::span<const Real> head, std::size_t t, MaskLogits &direct, MaskLogits &noise);

}  // namespace phm
