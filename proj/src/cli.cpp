#include "phm/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phm/config_io.hpp"
#include "phm/enhance.hpp"
#include "phm/error.hpp"
#include "phm/metrics.hpp"
#include "phm/oracle.hpp"
#include "phm/simkit.hpp"
#include "phm/wav.hpp"

namespace phm {

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;

struct UsageError : Error {
  using Error::Error;
};

StftConfig preset_config(const std::string &name) {
  if (name == "rt") return StftConfig::realtime();
  if (name == "nrt") return StftConfig::non_realtime();
  throw UsageError("unknown preset \"" + name + "\" (expected rt or nrt)");
}

WavEncoding parse_encoding(const std::string &name) {
  if (name == "float32") return WavEncoding::kFloat32;
  if (name == "pcm16") return WavEncoding::kPcm16;
  throw UsageError("unknown format \"" + name + "\" (expected float32 or pcm16)");
}

double parse_gain_db(const std::string &text) {
  if (text == "-inf" || text == "off") return kSuppressReverb;
  char *end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || std::isnan(v)) throw UsageError("bad gain \"" + text + "\"");
  return v;
}

void ensure_directory(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create directory " + dir);
}

nlohmann::json tally_json(const OpTally &tally, const UNetGeometry &geo) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < geo.layers.size(); ++i) j[geo.layers[i].name] = tally.per_layer[i];
  return j;
}

// ---------------------------------------------------------------------------

struct EnhanceArgs {
  std::string input, output, weights, config, drc_config, components, stats;
  std::optional<std::uint64_t> seed;
  std::string mode = "causal", preset = "rt", drc = "off", precision = "float", format = "float32";
  std::string reverb_gain = "-15";
  std::optional<double> lookahead_ms;
  double temperature = 1.0;
};

int cmd_enhance(const EnhanceArgs &a, std::ostream &out) {
  if (a.weights.empty() && !a.seed) throw UsageError("enhance: one of --weights or --seed is required");
  const auto stft_cfg = preset_config(a.preset);
  UNetConfig cfg = a.config.empty() ? UNetConfig::reference(stft_cfg) : parse_unet_config(read_text_file(a.config));
  if (a.lookahead_ms) cfg.lookahead_ms = *a.lookahead_ms;
  cfg.validate();

  EnhanceOptions opt;
  opt.stft = stft_cfg;
  if (a.mode == "causal") {
    opt.mode = InferenceMode::kCausalStream;
  } else if (a.mode == "noncausal") {
    opt.mode = InferenceMode::kNoncausalWindow;
  } else {
    throw UsageError("unknown mode \"" + a.mode + "\" (expected causal or noncausal)");
  }
  opt.precision = a.precision == "double" ? Precision::kDouble : Precision::kFloat;
  opt.reverb_gain_db = parse_gain_db(a.reverb_gain);
  opt.gumbel.temperature = a.temperature;
  if (a.drc == "on") {
    opt.drc = a.drc_config.empty() ? DrcConfig{} : parse_drc_config(read_text_file(a.drc_config));
  } else if (a.drc != "off") {
    throw UsageError("--drc expects on or off");
  }
  const auto encoding = parse_encoding(a.format);

  WeightSet weights = a.weights.empty() ? WeightSet::seeded(cfg, *a.seed) : load_weights(a.weights);
  const auto signal = read_wav(a.input);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = enhance(signal, weights, cfg, opt);
  const double elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  write_wav(a.output, result.output, encoding);
  if (!a.components.empty()) {
    ensure_directory(a.components);
    write_wav((fs::path(a.components) / "direct.wav").string(), result.direct, encoding);
    write_wav((fs::path(a.components) / "reverb.wav").string(), result.reverb, encoding);
    write_wav((fs::path(a.components) / "noise.wav").string(), result.noise, encoding);
  }
  const auto geo = resolve_geometry(cfg);
  if (!a.stats.empty()) {
    nlohmann::json j;
    j["samples"] = signal.size();
    j["frames"] = result.frames;
    j["mode"] = a.mode;
    j["preset"] = a.preset;
    j["stft"] = {{"window_size", stft_cfg.window_size},
                 {"hop_size", stft_cfg.hop_size},
                 {"fft_size", stft_cfg.fft_size},
                 {"discard_low_bins", stft_cfg.discard_low_bins}};
    j["precision"] = a.precision;
    j["lookahead_frames"] = cfg.lookahead_frames();
    j["weights"] = a.weights.empty() ? nlohmann::json{{"provenance", "seeded"}, {"seed", *a.seed}}
                                     : nlohmann::json{{"provenance", "file"}, {"path", a.weights}};
    j["ops"] = nlohmann::json::parse(result.ops.to_json());
    j["measured_mults"] = tally_json(result.measured, geo);
    j["measured_total"] = result.measured.total();
    write_text_file(a.stats, j.dump(2) + "\n");
  }
  char line[160];
  std::snprintf(line, sizeof line, "enhanced %zu samples (%zu frames, %s) in %.1f ms\n", signal.size(),
                result.frames, a.mode.c_str(), elapsed);
  out << line;
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 0;
  std::string out_dir, format = "float32";
  std::optional<double> snr_db, t60;
  std::vector<double> snr_range, t60_range;
  std::size_t count = 1;
};

int cmd_simulate(const SimulateArgs &a, std::ostream &out) {
  ScenarioRanges ranges;
  if (a.snr_db) ranges.snr_min_db = ranges.snr_max_db = *a.snr_db;
  if (!a.snr_range.empty()) {
    ranges.snr_min_db = a.snr_range[0];
    ranges.snr_max_db = a.snr_range[1];
  }
  if (a.t60) ranges.t60_min = ranges.t60_max = *a.t60;
  if (!a.t60_range.empty()) {
    ranges.t60_min = a.t60_range[0];
    ranges.t60_max = a.t60_range[1];
  }
  ranges.validate();
  const auto encoding = parse_encoding(a.format);
  ensure_directory(a.out_dir);

  std::ostringstream manifest;
  manifest << "index\tseed\tsnr_db\tt60\tmeasured_snr_db\tmixture\tdirect\treverb\tnoise\n";
  for (std::size_t i = 0; i < a.count; ++i) {
    const std::uint64_t seed = a.seed + i;
    const auto params = draw_scenario_params(seed, ranges);
    const auto truth = render_scenario(params, ranges.length);
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%04zu", i);
    const std::string names[4] = {std::string(stem) + "_mixture.wav", std::string(stem) + "_direct.wav",
                                  std::string(stem) + "_reverb.wav", std::string(stem) + "_noise.wav"};
    const SignalBuffer *parts[4] = {&truth.x, &truth.y_d, &truth.y_r, &truth.y_n};
    for (int k = 0; k < 4; ++k) write_wav((fs::path(a.out_dir) / names[k]).string(), *parts[k], encoding);
    char row[160];
    std::snprintf(row, sizeof row, "%zu\t%llu\t%.9f\t%.9f\t%.9f\t", i, static_cast<unsigned long long>(seed),
                  params.snr_db, params.t60, measured_snr_db(truth.y_d, truth.y_r, truth.y_n));
    manifest << row << names[0] << '\t' << names[1] << '\t' << names[2] << '\t' << names[3] << '\n';
  }
  write_text_file((fs::path(a.out_dir) / "manifest.tsv").string(), manifest.str());
  out << "wrote " << a.count << " scenario(s) to " << a.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::string reference, estimate, preset = "rt";
  bool json = false;
};

int cmd_metrics(const MetricsArgs &a, std::ostream &out) {
  auto cfg = preset_config(a.preset);
  cfg.discard_low_bins = 0;
  const auto ref = read_wav(a.reference);
  const auto est = read_wav(a.estimate);
  MetricReport r;
  r.reference_id = a.reference;
  r.estimate_id = a.estimate;
  r.si_sdr_db = si_sdr(ref, est);
  r.phase_distance_deg = phase_distance(stft(ref, cfg), stft(est, cfg));
  out << (a.json ? r.to_json() + "\n" : r.to_text());
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string config = "default", mode = "both", preset = "rt";
  bool json = false;
};

struct MeasuredOps {
  OpTally naive, streaming;
};

MeasuredOps measure_ops(const UNetConfig &cfg) {
  const Network<float> net(cfg, WeightSet::seeded(cfg, 0));
  MeasuredOps m{OpTally(net.geometry().layers.size()), OpTally()};
  const std::vector<float> window(static_cast<std::size_t>(cfg.frames) * net.input_frame_size(), 0.0f);
  net.naive_infer(window, &m.naive);
  StreamState<float> state(net);
  const std::vector<float> frame(net.input_frame_size(), 0.0f);
  // Steady state: every depth has frames to produce on every push.
  for (int i = 0; i < cfg.frames + 1; ++i) state.push(frame);
  m.streaming = state.last_push_ops();
  return m;
}

int cmd_bench_ops(const BenchArgs &a, std::ostream &out) {
  if (a.mode != "both" && a.mode != "naive" && a.mode != "streaming") {
    throw UsageError("--mode expects both, naive or streaming");
  }
  const auto cfg = a.config == "default" ? UNetConfig::reference(preset_config(a.preset))
                                         : parse_unet_config(read_text_file(a.config));
  const auto report = count_ops(cfg);
  const auto measured = measure_ops(cfg);
  bool consistent = true;
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    consistent = consistent && report.layers[i].naive == measured.naive.per_layer[i] &&
                 report.layers[i].streaming == measured.streaming.per_layer[i];
  }
  const bool naive = a.mode != "streaming", streaming = a.mode != "naive";
  if (a.json) {
    auto j = nlohmann::json::parse(report.to_json());
    for (std::size_t i = 0; i < report.layers.size(); ++i) {
      if (naive) j["layers"][i]["measured_naive_mults"] = measured.naive.per_layer[i];
      if (streaming) j["layers"][i]["measured_streaming_mults"] = measured.streaming.per_layer[i];
    }
    j["analytic_matches_measured"] = consistent;
    out << j.dump(2) << "\n";
  } else {
    char line[200];
    std::snprintf(line, sizeof line, "%-6s", "layer");
    std::string header = line;
    if (naive) header += "  naive_analytic  naive_measured";
    if (streaming) header += "  stream_analytic  stream_measured";
    out << header << "  reduction\n";
    for (std::size_t i = 0; i < report.layers.size(); ++i) {
      const auto &l = report.layers[i];
      std::snprintf(line, sizeof line, "%-6s", l.name.c_str());
      std::string row = line;
      if (naive) {
        std::snprintf(line, sizeof line, "  %14llu  %14llu", static_cast<unsigned long long>(l.naive),
                      static_cast<unsigned long long>(measured.naive.per_layer[i]));
        row += line;
      }
      if (streaming) {
        std::snprintf(line, sizeof line, "  %15llu  %15llu", static_cast<unsigned long long>(l.streaming),
                      static_cast<unsigned long long>(measured.streaming.per_layer[i]));
        row += line;
      }
      std::snprintf(line, sizeof line, "  %8.2f%%\n", 100.0 * l.reduction);
      out << row << line;
    }
    std::snprintf(line, sizeof line, "total naive %llu, streaming %llu per frame\n",
                  static_cast<unsigned long long>(report.naive_total),
                  static_cast<unsigned long long>(report.streaming_total));
    out << line;
    std::snprintf(line, sizeof line, "overall reduction: %.2f%% (reference figure for the original architecture: 88.9%%)\n",
                  100.0 * report.overall_reduction);
    out << line;
    out << "analytic vs measured: " << (consistent ? "equal" : "MISMATCH") << "\n";
  }
  return consistent ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::uint64_t seed = 0;
  std::size_t count = 20;
  double min_sdr = 50.0;
  bool json = false;
};

int cmd_oracle_check(const OracleArgs &a, std::ostream &out) {
  const auto report = run_oracle_check(a.seed, a.count);
  out << (a.json ? report.to_json() + "\n" : report.to_text());
  if (report.cases.empty()) return 0;
  return report.min_si_sdr_db >= a.min_sdr ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Phase-aware speech denoising and dereverberation engine", "phm"};
  app.require_subcommand(1);

  EnhanceArgs ea;
  auto *enh = app.add_subcommand("enhance", "Enhance a 16 kHz mono WAV file");
  enh->add_option("--input", ea.input, "Input WAV")->required();
  enh->add_option("--output", ea.output, "Output WAV (remix)")->required();
  auto *w_opt = enh->add_option("--weights", ea.weights, "Weight file (PHMW)");
  auto *s_opt = enh->add_option("--seed", ea.seed, "Seeded random weights instead of a file");
  w_opt->excludes(s_opt);
  enh->add_option("--mode", ea.mode, "causal | noncausal")->capture_default_str();
  enh->add_option("--preset", ea.preset, "rt | nrt")->capture_default_str();
  enh->add_option("--reverb-gain-db", ea.reverb_gain, "Reverb gain in the remix (dB, or -inf)")->capture_default_str();
  enh->add_option("--lookahead-ms", ea.lookahead_ms, "Override the network lookahead");
  enh->add_option("--config", ea.config, "UNet config JSON");
  enh->add_option("--drc", ea.drc, "on | off")->capture_default_str();
  enh->add_option("--drc-config", ea.drc_config, "Compressor config JSON");
  enh->add_option("--emit-components", ea.components, "Directory for direct/reverb/noise WAVs");
  enh->add_option("--emit-stats", ea.stats, "JSON statistics output");
  enh->add_option("--precision", ea.precision, "float | double")
      ->check(CLI::IsMember({"float", "double"}))
      ->capture_default_str();
  enh->add_option("--format", ea.format, "float32 | pcm16")->capture_default_str();
  enh->add_option("--gumbel-temperature", ea.temperature, "Sign softmax temperature")->capture_default_str();

  SimulateArgs sa;
  auto *sim = app.add_subcommand("simulate", "Generate synthetic mixtures with ground-truth components");
  sim->add_option("--seed", sa.seed, "Base seed")->capture_default_str();
  sim->add_option("--out-dir", sa.out_dir, "Output directory")->required();
  auto *snr_opt = sim->add_option("--snr-db", sa.snr_db, "Fixed SNR");
  sim->add_option("--snr-range", sa.snr_range, "SNR range lo hi")->expected(2)->excludes(snr_opt);
  auto *t60_opt = sim->add_option("--t60", sa.t60, "Fixed T60 in seconds");
  sim->add_option("--t60-range", sa.t60_range, "T60 range lo hi")->expected(2)->excludes(t60_opt);
  sim->add_option("--count", sa.count, "Number of scenarios")->capture_default_str();
  sim->add_option("--format", sa.format, "float32 | pcm16")->capture_default_str();

  MetricsArgs ma;
  auto *met = app.add_subcommand("metrics", "SI-SDR and phase distance between two WAV files");
  met->add_option("--reference", ma.reference, "Reference WAV")->required();
  met->add_option("--estimate", ma.estimate, "Estimate WAV")->required();
  met->add_option("--stft-preset", ma.preset, "rt | nrt")->capture_default_str();
  met->add_flag("--json", ma.json, "Structured output");

  BenchArgs ba;
  auto *bench = app.add_subcommand("bench-ops", "Per-layer multiplication counts, naive vs streaming");
  bench->add_option("--config", ba.config, "UNet config JSON or 'default'")->capture_default_str();
  bench->add_option("--mode", ba.mode, "both | naive | streaming")->capture_default_str();
  bench->add_option("--preset", ba.preset, "STFT preset for the default config")->capture_default_str();
  bench->add_flag("--json", ba.json, "Structured output");

  OracleArgs oa;
  auto *orc = app.add_subcommand("oracle-check", "Ideal-mask reconstruction of simulated mixtures");
  orc->add_option("--seed", oa.seed, "Base seed")->capture_default_str();
  orc->add_option("--count", oa.count, "Number of mixtures")->capture_default_str();
  orc->add_option("--min-sdr", oa.min_sdr, "Failure threshold in dB")->capture_default_str();
  orc->add_flag("--json", oa.json, "Structured output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*enh) return cmd_enhance(ea, out);
    if (*sim) return cmd_simulate(sa, out);
    if (*met) return cmd_metrics(ma, out);
    if (*bench) return cmd_bench_ops(ba, out);
    if (*orc) return cmd_oracle_check(oa, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsageError;
}

}  // namespace phm
