#pragma once

// Front-end signal flow: STFT -> (SRP-PHAT) -> MVDR -> CDR estimation ->
// Wiener postfilter -> inverse STFT, plus file-level and batch drivers.

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cdrfe/beamformer.hpp"
#include "cdrfe/cdr.hpp"
#include "cdrfe/config.hpp"
#include "cdrfe/error.hpp"
#include "cdrfe/io.hpp"
#include "cdrfe/localization.hpp"
#include "cdrfe/postfilter.hpp"
#include "cdrfe/spectral_stats.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

/// Everything the front-end computes for one utterance.
struct Enhancement {
  Eigen::VectorXd output;     // enhanced mono signal, same length as the input
  Eigen::MatrixXcd y_bf;      // beamformer output [L x F]
  Eigen::MatrixXcd y;         // postfilter output [L x F]
  CdrEstimate cdr_bf;         // CDR / diffuseness at the beamformer output
  GainMask gains;
  CorrectionFactor correction;
  DoA doa;
  std::optional<Eigen::MatrixXd> pseudo_spectrum;
  std::size_t context_frames = 0;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_ms;
};

namespace detail {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

 private:
  std::map<std::string, double>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// Frames lying entirely inside [start, end) seconds.
inline std::pair<std::size_t, std::size_t> context_frames(const NoiseContext& ctx, std::size_t num_samples,
                                                          std::size_t num_frames, const FrameParams& params) {
  const double fs = params.sample_rate;
  const double duration = static_cast<double>(num_samples) / fs;
  if (ctx.start < 0.0 || ctx.end > duration + 1e-9 || ctx.end <= ctx.start)
    throw InvalidArgument("noise context [" + std::to_string(ctx.start) + ", " + std::to_string(ctx.end) +
                          ") s lies outside the " + std::to_string(duration) + " s input");
  const auto s0 = static_cast<std::size_t>(std::ceil(ctx.start * fs - 1e-6));
  const auto s1 = static_cast<std::size_t>(std::floor(ctx.end * fs + 1e-6));
  const std::size_t hop = params.hop();
  const std::size_t first = (s0 + hop - 1) / hop;
  std::size_t last = first;
  while (last < num_frames && last * hop + params.frame_len <= s1) ++last;
  if (last == first) throw InvalidArgument("noise context is shorter than one frame");
  return {first, last};
}

}  // namespace detail

/// Runs the front-end on an in-memory multichannel signal.
inline Enhancement enhance(const Signal& input, const PipelineConfig& cfg) {
  cfg.validate();
  detail::require(input.cols() >= 2, "input needs at least 2 channels");
  detail::require_dims(static_cast<std::size_t>(input.cols()) == cfg.geometry.size(),
                       "input has " + std::to_string(input.cols()) + " channels, geometry has " +
                           std::to_string(cfg.geometry.size()));
  const auto& params = cfg.frame;
  const auto mask = cfg.mask();

  Enhancement out;
  detail::StageTimer timer(out.timings_ms);
  const auto spectrum = analyze(input, params);
  timer.mark("stft");

  if (cfg.doa_mode == DoaMode::SrpPhat) {
    const auto grid = DoAGrid::uniform(cfg.localization.azimuth_step_deg, cfg.localization.elevations_deg);
    auto loc = srp_phat(spectrum, cfg.geometry, grid, mask, cfg.localization.options);
    out.doa = loc.doa;
    out.pseudo_spectrum = std::move(loc.pseudo_spectrum);
  } else {
    out.doa = cfg.doa;
  }
  timer.mark("localization");

  BeamformerWeights weights;
  if (cfg.beamformer_enabled) {
    const auto [first, last] = detail::context_frames(cfg.noise_context, static_cast<std::size_t>(input.rows()),
                                                      spectrum.num_frames(), params);
    out.context_frames = last - first;
    if (auto w = context_duration_warning(out.context_frames, params)) out.warnings.push_back(*w);
    const auto noise = estimate_noise_covariance(spectrum.frames(first, last), mask);
    const auto steering = steering_vectors(cfg.geometry, out.doa, params);
    weights = mvdr_weights(noise, steering, cfg.diagonal_loading, out.doa);
  } else {
    // Pass-through of the reference channel.
    weights.mask = mask;
    weights.doa = out.doa;
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(cfg.geometry.size()));
    e(static_cast<Eigen::Index>(cfg.reference_channel)) = 1.0;
    weights.w.assign(params.num_bins(), e);
  }
  out.y_bf = apply(weights, spectrum);
  out.correction = CorrectionFactor::compute(weights, cfg.geometry, params);
  timer.mark("beamformer");

  const CdrOptions cdr_opts{cfg.forgetting_factor, cfg.cdr_max};
  out.cdr_bf = beamformer_output_cdr(estimate_input_cdr(spectrum, cfg.geometry, mask, cdr_opts), out.correction,
                                     cfg.cdr_max);
  timer.mark("cdr");

  if (cfg.postfilter_enabled) {
    out.gains = compute_gains(out.cdr_bf.cdr, cfg.postfilter);
    out.y = apply_gain(out.y_bf, out.gains);
  } else {
    out.gains.g = Eigen::MatrixXd::Ones(out.y_bf.rows(), out.y_bf.cols());
    out.y = out.y_bf;
  }
  timer.mark("postfilter");

  out.output = synthesize(out.y, params).head(input.rows());
  timer.mark("istft");
  return out;
}

/// Outcome of one utterance.
struct Report {
  std::string input;
  std::string output;
  bool ok = false;
  std::string error;
  std::optional<DoA> doa;
  std::string doa_mode;
  double a_gamma_min = 0.0, a_gamma_mean = 0.0, a_gamma_max = 0.0;
  std::size_t num_frames = 0;
  std::size_t context_frames = 0;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_ms;

  Json to_json() const {
    Json j{{"input", input}, {"output", output}, {"ok", ok}};
    if (!ok) {
      j["error"] = error;
      return j;
    }
    j["doa"] = {{"mode", doa_mode}, {"azimuth_deg", doa->azimuth_deg()}, {"elevation_deg", doa->elevation_deg()}};
    j["a_gamma"] = {{"min", a_gamma_min}, {"mean", a_gamma_mean}, {"max", a_gamma_max}};
    j["num_frames"] = num_frames;
    j["context_frames"] = context_frames;
    j["warnings"] = warnings;
    j["timings_ms"] = timings_ms;
    return j;
  }
};

namespace detail {

inline Eigen::MatrixXd magnitude(const Eigen::MatrixXcd& m) { return m.cwiseAbs(); }

inline void write_exports(const Enhancement& e, const PipelineConfig& cfg, const std::filesystem::path& output) {
  const auto& ex = cfg.exports;
  if (!ex.any()) return;
  const auto dir = ex.dir.empty() ? output.parent_path() : ex.dir;
  const auto stem = output.stem().string();
  auto path = [&](const char* suffix) { return dir / (stem + suffix); };
  if (ex.beamformer_spectrogram) io::write_text_matrix(path(".ybf.txt"), magnitude(e.y_bf));
  if (ex.output_spectrogram) io::write_text_matrix(path(".y.txt"), magnitude(e.y));
  if (ex.diffuseness) io::write_text_matrix(path(".diffuseness.txt"), e.cdr_bf.diffuseness);
  if (ex.gains) io::write_text_matrix(path(".gains.txt"), e.gains.g);
  if (ex.pseudo_spectrum && e.pseudo_spectrum) io::write_text_matrix(path(".srp.txt"), *e.pseudo_spectrum);
}

}  // namespace detail

/// Reads `input`, enhances it and writes a mono float WAV to `output`.
/// Errors are reported, not thrown.
inline Report run(const PipelineConfig& cfg, const std::filesystem::path& input, const std::filesystem::path& output) {
  Report rep;
  rep.input = input.string();
  rep.output = output.string();
  try {
    const auto wav = io::read_wav(input);
    if (std::abs(wav.sample_rate - cfg.frame.sample_rate) > 1e-9)
      throw InvalidArgument("sample rate " + std::to_string(wav.sample_rate) + " Hz differs from configured " +
                            std::to_string(cfg.frame.sample_rate) + " Hz");
    if (wav.samples.cols() < 2) throw InvalidArgument("input must have at least 2 channels");
    const auto e = enhance(wav.samples, cfg);
    io::write_wav(output, e.output, cfg.frame.sample_rate);
    detail::write_exports(e, cfg, output);

    rep.ok = true;
    rep.doa = e.doa;
    rep.doa_mode = cfg.doa_mode == DoaMode::SrpPhat ? "srp-phat" : "fixed";
    rep.a_gamma_min = e.correction.a_gamma.minCoeff();
    rep.a_gamma_mean = e.correction.a_gamma.mean();
    rep.a_gamma_max = e.correction.a_gamma.maxCoeff();
    rep.num_frames = static_cast<std::size_t>(e.y.rows());
    rep.context_frames = e.context_frames;
    rep.warnings = e.warnings;
    rep.timings_ms = e.timings_ms;
  } catch (const std::exception& ex) {
    rep.ok = false;
    rep.error = ex.what();
  }
  return rep;
}

/// One manifest line: paths plus optional per-utterance overrides.
struct Utterance {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<NoiseContext> noise_context;
  std::optional<Json> channel_mask;
};

/// {"utterances": [{"input", "output", "noise_context"?, "channel_mask"?}, ...]}
/// or a bare list of such objects. Relative paths resolve against `base_dir`.
inline std::vector<Utterance> manifest_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  const Json* list = &j;
  if (j.is_object()) {
    detail::check_keys(j, {"utterances"}, "manifest");
    if (!j.contains("utterances")) throw ConfigError("manifest: missing 'utterances'");
    list = &j.at("utterances");
  }
  if (!list->is_array()) throw ConfigError("manifest: utterances must be a list");
  std::vector<Utterance> out;
  for (const auto& u : *list) {
    detail::check_keys(u, {"input", "output", "noise_context", "channel_mask"}, "manifest entry");
    if (!u.contains("input") || !u.contains("output") || !u.at("input").is_string() || !u.at("output").is_string())
      throw ConfigError("manifest entry: 'input' and 'output' paths are required");
    Utterance utt;
    utt.input = detail::resolve(base_dir, u.at("input").get<std::string>());
    utt.output = detail::resolve(base_dir, u.at("output").get<std::string>());
    if (u.contains("noise_context")) utt.noise_context = noise_context_from_json(u.at("noise_context"));
    if (u.contains("channel_mask")) utt.channel_mask = u.at("channel_mask");
    out.push_back(std::move(utt));
  }
  return out;
}

inline std::vector<Utterance> load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(detail::read_json_file(path), path.parent_path());
}

struct BatchReport {
  std::vector<Report> utterances;
  bool all_ok() const {
    return std::all_of(utterances.begin(), utterances.end(), [](const Report& r) { return r.ok; });
  }
  Json to_json() const {
    Json arr = Json::array();
    for (const auto& r : utterances) arr.push_back(r.to_json());
    return Json{{"ok", all_ok()}, {"utterances", arr}};
  }
};

/// Processes utterances independently on `jobs` worker threads. Reports keep
/// manifest order; a failing utterance never stops the others.
inline BatchReport run_batch(const PipelineConfig& cfg, const std::vector<Utterance>& manifest, unsigned jobs = 1) {
  BatchReport batch;
  batch.utterances.resize(manifest.size());
  auto process = [&](std::size_t i) {
    const auto& utt = manifest[i];
    try {
      PipelineConfig local = cfg;
      if (utt.noise_context) local.noise_context = *utt.noise_context;
      if (utt.channel_mask) local.channel_mask = channel_mask_from_json(*utt.channel_mask, cfg.geometry.size());
      local.validate();
      batch.utterances[i] = run(local, utt.input, utt.output);
    } catch (const std::exception& ex) {
      auto& r = batch.utterances[i];
      r.input = utt.input.string();
      r.output = utt.output.string();
      r.ok = false;
      r.error = ex.what();
    }
  };

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(manifest.size(), 1))));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) process(i);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return batch;
}

}  // namespace cdrfe
