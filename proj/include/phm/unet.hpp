#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phm/stft.hpp"

namespace phm {

/// Mask head outputs per bin: five logit grids for the direct/rest pair
/// followed by five for the noise/rest pair.
inline constexpr int kHeadChannels = 10;

struct EncoderLayerSpec {
  int kernel_f = 5;
  int kernel_t = 3;
  int stride_f = 2;
  int stride_t = 1;
  int out_channels = 16;
};

/// Valid-in-time U-Net description. The decoder is derived: decoder layer l
/// is the transpose of encoder layer l, fed by the previous decoder output
/// concatenated with the encoder skip at that depth.
struct UNetConfig {
  std::vector<EncoderLayerSpec> encoder;
  int input_bins = 253;
  int input_channels = 5;  // feature stack depth
  int frames = 65;         // context window T
  double lookahead_ms = 32.0;
  int hop_size = 128;      // only used to convert lookahead to frames
  double leaky_slope = 0.01;
  int decoder_out_channels = 16;

  /// Five 5x3 layers, temporal strides [1,2,1,2,1], frequency stride 2,
  /// channels [16,32,48,64,80].
  static UNetConfig reference(const StftConfig &stft = StftConfig::realtime());

  int depth() const { return static_cast<int>(encoder.size()); }
  /// round(lookahead_ms / hop duration).
  int lookahead_frames() const;
  /// Index of the emitted frame inside the context window.
  int target_frame() const { return frames - 1 - lookahead_frames(); }
  void validate() const;
};

enum class LayerKind { kEncoder, kDecoder, kHead };

/// Resolved geometry of one convolution. For decoder layers, (f_in, f_out)
/// are the transposed sizes, i.e. f_in is the coarse side.
struct LayerShape {
  std::string name;
  LayerKind kind;
  int kernel_f, kernel_t, stride_f, stride_t;
  int in_channels, out_channels;
  int f_in, f_out;
  int pad_f;       // leading zero padding of the (forward) frequency conv
  int frames_in;   // naive window: frames of the layer input
  int frames_out;  // naive window: frames of the layer output
  bool activation;
};

/// Per-depth temporal bookkeeping shared by both execution backends.
struct UNetGeometry {
  int depth = 0;
  int frames = 0;
  int target = 0;
  std::vector<int> enc_frames;   // T_l, l = 0..L (T_0 = window)
  std::vector<int> dec_frames;   // decoder-side frames at level l (D_l / U_{l+1}), l = 0..L
  std::vector<int> bins;         // F_l, l = 0..L
  std::vector<int> channels;     // encoder channels C_l, l = 0..L
  std::vector<int> phase;        // P_l = prod of temporal strides up to l
  std::vector<int> receptive;    // R_l, input frames spanned by one level-l frame
  // Decoder cone: frames of U_{l+1} (level l resolution) needed for the
  // target, l = 0..L-1, and frames of D_l consumed, l = 1..L.
  std::vector<std::vector<int>> cone_out;
  std::vector<std::vector<int>> cone_in;
  int earliest_input = 0;          // first window frame the target depends on
  std::vector<LayerShape> layers;  // enc1..encL, decL..dec1, head
};

UNetGeometry resolve_geometry(const UNetConfig &cfg);

/// Number of streaming queue phases at depth d (1-based): prod_{l<=d} s_l.
std::uint64_t required_queues(const UNetConfig &cfg, int depth);

/// Valid (output position, tap) pairs along frequency for one layer.
std::uint64_t frequency_pairs(const LayerShape &layer);

}  // namespace phm
