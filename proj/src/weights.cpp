#include "phm/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "phm/error.hpp"

namespace phm {
namespace {

constexpr char kMagic[4] = {'P', 'H', 'M', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t> &bytes) : bytes_(bytes) {}
  std::uint32_t u32(const char *what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const char *what) {
    need(n, what);
    std::string s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const char *what) const {
    if (bytes_.size() - pos_ < n) throw Error(std::string("weights: truncated file while reading ") + what);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t> &bytes_;
  std::size_t pos_ = 0;
};

std::string dims_to_string(const std::vector<std::uint32_t> &dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::pair<std::string, std::vector<std::uint32_t>>> expected_tensors(const UNetConfig &cfg) {
  const auto geo = resolve_geometry(cfg);
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> out;
  for (const auto &layer : geo.layers) {
    const auto u = [](int v) { return static_cast<std::uint32_t>(v); };
    out.push_back({layer.name + ".weight",
                   {u(layer.kernel_t), u(layer.kernel_f), u(layer.in_channels), u(layer.out_channels)}});
    out.push_back({layer.name + ".bias", {u(layer.out_channels)}});
  }
  return out;
}

WeightSet WeightSet::seeded(const UNetConfig &cfg, std::uint64_t seed, double scale) {
  WeightSet ws;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto &[name, dims] : expected_tensors(cfg)) {
    Tensor t{dims, {}};
    t.values.resize(t.element_count());
    for (auto &v : t.values) v = static_cast<float>(dist(rng));
    ws.set(name, std::move(t));
  }
  ws.set_provenance(Provenance::kSeededRandom, seed);
  return ws;
}

WeightSet WeightSet::zeros(const UNetConfig &cfg) {
  WeightSet ws;
  for (auto &[name, dims] : expected_tensors(cfg)) {
    Tensor t{dims, {}};
    t.values.assign(t.element_count(), 0.0f);
    ws.set(name, std::move(t));
  }
  return ws;
}

void WeightSet::set(const std::string &name, Tensor tensor) {
  if (tensor.values.size() != tensor.element_count()) {
    throw Error("weights: tensor " + name + " has inconsistent dims");
  }
  for (auto &nt : tensors_) {
    if (nt.name == name) {
      nt.tensor = std::move(tensor);
      return;
    }
  }
  tensors_.push_back({name, std::move(tensor)});
}

bool WeightSet::contains(const std::string &name) const {
  for (const auto &nt : tensors_) {
    if (nt.name == name) return true;
  }
  return false;
}

const Tensor &WeightSet::at(const std::string &name) const {
  for (const auto &nt : tensors_) {
    if (nt.name == name) return nt.tensor;
  }
  throw Error("weights: missing tensor " + name);
}

Tensor &WeightSet::at(const std::string &name) {
  return const_cast<Tensor &>(static_cast<const WeightSet &>(*this).at(name));
}

void WeightSet::check_shapes(const UNetConfig &cfg) const {
  for (const auto &[name, dims] : expected_tensors(cfg)) {
    const std::string layer = name.substr(0, name.find('.'));
    if (!contains(name)) throw Error("shape mismatch: " + layer + " (missing " + name + ")");
    const auto &t = at(name);
    if (t.dims != dims) {
      throw Error("shape mismatch: " + layer + " (" + name + " is " + dims_to_string(t.dims) +
                  ", expected " + dims_to_string(dims) + ")");
    }
  }
}

std::vector<std::uint8_t> serialize_weights(const WeightSet &weights) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(weights.tensors().size()));
  for (const auto &nt : weights.tensors()) {
    put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
    out.insert(out.end(), nt.name.begin(), nt.name.end());
    put_u32(out, static_cast<std::uint32_t>(nt.tensor.dims.size()));
    for (auto d : nt.tensor.dims) put_u32(out, d);
    for (float v : nt.tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightSet deserialize_weights(const std::vector<std::uint8_t> &bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != std::string(kMagic, 4)) throw Error("weights: bad magic (expected PHMW)");
  const auto version = r.u32("version");
  if (version != kVersion) throw Error("weights: unsupported version " + std::to_string(version));
  const auto count = r.u32("tensor count");
  WeightSet ws;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.u32("name length");
    if (name_len > 4096) throw Error("weights: implausible name length");
    auto name = r.str(name_len, "name");
    const auto rank = r.u32("rank");
    if (rank > 8) throw Error("weights: implausible rank for " + name);
    Tensor t;
    for (std::uint32_t d = 0; d < rank; ++d) t.dims.push_back(r.u32("dims"));
    const std::size_t n = t.element_count();
    if (n > bytes.size()) throw Error("weights: truncated file while reading tensor values");
    r.need(n * 4, "tensor values");
    t.values.resize(n);
    for (auto &v : t.values) v = std::bit_cast<float>(r.u32("tensor values"));
    ws.set(name, std::move(t));
  }
  if (!r.done()) throw Error("weights: trailing bytes after last tensor");
  return ws;
}

void save_weights(const std::string &path, const WeightSet &weights) {
  const auto bytes = serialize_weights(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("weights: cannot write " + path);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("weights: write failed for " + path);
}

WeightSet load_weights(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("weights: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto ws = deserialize_weights(bytes);
  ws.set_provenance(WeightSet::Provenance::kFile);
  return ws;
}

ConvWeights fuse_batchnorm(const ConvWeights &conv, const BatchNormParams &bn) {
  const std::size_t cout = conv.out_channels();
  if (cout == 0 || conv.bias.size() != cout || conv.weight.size() % cout != 0) {
    throw Error("fuse_batchnorm: malformed convolution weights");
  }
  if (bn.gamma.size() != cout || bn.beta.size() != cout || bn.mean.size() != cout ||
      bn.variance.size() != cout) {
    throw Error("fuse_batchnorm: channel-count mismatch (" + std::to_string(cout) +
                " output channels)");
  }
  ConvWeights out = conv;
  for (std::size_t c = 0; c < cout; ++c) {
    const double scale = bn.gamma[c] / std::sqrt(bn.variance[c] + bn.eps);
    for (std::size_t i = c; i < out.weight.size(); i += cout) out.weight[i] *= scale;
    out.bias[c] = (conv.bias[c] - bn.mean[c]) * scale + bn.beta[c];
  }
  return out;
}

}  // namespace phm
