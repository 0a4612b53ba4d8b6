#include "phm/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phm/error.hpp"

namespace phm {

using nlohmann::json;

namespace {

void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where) {
  if (!j.is_object()) throw Error(where + ": expected an object");
  for (const auto &item : j.items()) {
    if (!known.count(item.key())) throw Error(where + ": unknown key \"" + item.key() + "\"");
  }
}

template <typename T>
void read_field(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw Error(where + ": bad value for \"" + key + "\"");
  }
}

json parse(const std::string &text, const std::string &where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error(where + ": " + e.what());
  }
}

}  // namespace

UNetConfig parse_unet_config(const std::string &text) {
  const std::string where = "unet config";
  const json j = parse(text, where);
  reject_unknown(j, {"encoder", "input_bins", "input_channels", "frames", "lookahead_ms", "hop_size",
                     "leaky_slope", "decoder_out_channels"},
                 where);
  UNetConfig cfg = UNetConfig::reference();
  if (j.contains("encoder")) {
    if (!j["encoder"].is_array()) throw Error(where + ": \"encoder\" must be an array");
    cfg.encoder.clear();
    for (const auto &layer : j["encoder"]) {
      const std::string lw = where + " encoder layer " + std::to_string(cfg.encoder.size() + 1);
      reject_unknown(layer, {"kernel_f", "kernel_t", "stride_f", "stride_t", "out_channels"}, lw);
      EncoderLayerSpec e;
      read_field(layer, "kernel_f", e.kernel_f, lw);
      read_field(layer, "kernel_t", e.kernel_t, lw);
      read_field(layer, "stride_f", e.stride_f, lw);
      read_field(layer, "stride_t", e.stride_t, lw);
      read_field(layer, "out_channels", e.out_channels, lw);
      cfg.encoder.push_back(e);
    }
  }
  read_field(j, "input_bins", cfg.input_bins, where);
  read_field(j, "input_channels", cfg.input_channels, where);
  read_field(j, "frames", cfg.frames, where);
  read_field(j, "lookahead_ms", cfg.lookahead_ms, where);
  read_field(j, "hop_size", cfg.hop_size, where);
  read_field(j, "leaky_slope", cfg.leaky_slope, where);
  read_field(j, "decoder_out_channels", cfg.decoder_out_channels, where);
  cfg.validate();
  return cfg;
}

std::string unet_config_to_json(const UNetConfig &cfg) {
  json j;
  j["encoder"] = json::array();
  for (const auto &e : cfg.encoder) {
    j["encoder"].push_back({{"kernel_f", e.kernel_f},
                            {"kernel_t", e.kernel_t},
                            {"stride_f", e.stride_f},
                            {"stride_t", e.stride_t},
                            {"out_channels", e.out_channels}});
  }
  j["input_bins"] = cfg.input_bins;
  j["input_channels"] = cfg.input_channels;
  j["frames"] = cfg.frames;
  j["lookahead_ms"] = cfg.lookahead_ms;
  j["hop_size"] = cfg.hop_size;
  j["leaky_slope"] = cfg.leaky_slope;
  j["decoder_out_channels"] = cfg.decoder_out_channels;
  return j.dump(2) + "\n";
}

DrcConfig parse_drc_config(const std::string &text) {
  const std::string where = "drc config";
  const json j = parse(text, where);
  reject_unknown(j, {"threshold_db", "ratio", "attack_ms", "release_ms", "makeup_db"}, where);
  DrcConfig cfg;
  read_field(j, "threshold_db", cfg.threshold_db, where);
  read_field(j, "ratio", cfg.ratio, where);
  read_field(j, "attack_ms", cfg.attack_ms, where);
  read_field(j, "release_ms", cfg.release_ms, where);
  read_field(j, "makeup_db", cfg.makeup_db, where);
  cfg.validate();
  return cfg;
}

std::string drc_config_to_json(const DrcConfig &cfg) {
  json j{{"threshold_db", cfg.threshold_db},
         {"ratio", cfg.ratio},
         {"attack_ms", cfg.attack_ms},
         {"release_ms", cfg.release_ms},
         {"makeup_db", cfg.makeup_db}};
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

}  // namespace phm
