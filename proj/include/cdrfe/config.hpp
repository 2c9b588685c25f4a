#pragma once

// Pipeline and scene configuration, loaded from JSON.
//
// Every field is optional except the geometry. Unknown keys are rejected so
// that typos do not silently fall back to defaults.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdrfe/beamformer.hpp"
#include "cdrfe/cdr.hpp"
#include "cdrfe/error.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/localization.hpp"
#include "cdrfe/postfilter.hpp"
#include "cdrfe/simulator.hpp"
#include "cdrfe/spectral_stats.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

using Json = nlohmann::json;

/// Time interval (seconds) whose frames estimate the noise covariance.
struct NoiseContext {
  double start = 0.0;
  double end = 0.5;
};

enum class DoaMode { Fixed, SrpPhat };

struct LocalizationConfig {
  double azimuth_step_deg = 5.0;
  std::vector<double> elevations_deg{90.0};
  SrpPhatOptions options;
};

struct ExportOptions {
  std::filesystem::path dir;  // empty: exports go next to the output file
  bool beamformer_spectrogram = false;
  bool output_spectrogram = false;
  bool diffuseness = false;
  bool gains = false;
  bool pseudo_spectrum = false;

  bool any() const {
    return beamformer_spectrogram || output_spectrogram || diffuseness || gains || pseudo_spectrum;
  }
};

struct PipelineConfig {
  ArrayGeometry geometry;
  FrameParams frame;
  PostfilterParams postfilter;
  bool postfilter_enabled = true;
  bool beamformer_enabled = true;
  std::size_t reference_channel = 0;
  double forgetting_factor = kDefaultForgettingFactor;
  double cdr_max = kDefaultCdrMax;
  double diagonal_loading = kDefaultDiagonalLoading;
  NoiseContext noise_context;
  DoaMode doa_mode = DoaMode::Fixed;
  DoA doa;  // used when doa_mode == Fixed
  LocalizationConfig localization;
  std::optional<ChannelMask> channel_mask;  // default: all channels active
  ExportOptions exports;

  ChannelMask mask() const { return channel_mask ? *channel_mask : ChannelMask::all(geometry.size()); }

  void validate() const {
    frame.validate();
    postfilter.validate();
    detail::require(forgetting_factor >= 0.0 && forgetting_factor < 1.0, "lambda must lie in [0, 1)");
    detail::require(cdr_max > 0.0 && std::isfinite(cdr_max), "cdr_max must be positive and finite");
    detail::require(diagonal_loading >= 0.0, "diagonal_loading must be >= 0");
    detail::require(noise_context.start >= 0.0 && noise_context.end > noise_context.start,
                    "noise context must satisfy 0 <= start < end");
    detail::require(geometry.size() >= 2, "geometry needs at least 2 microphones");
    const auto m = mask();
    detail::require(m.size() == geometry.size(), "channel mask length differs from microphone count");
    detail::require(m.count() >= 2, "at least 2 channels must be active");
    detail::require(reference_channel < geometry.size() && m.active(reference_channel),
                    "reference channel must be an active microphone");
    detail::require(localization.azimuth_step_deg > 0.0, "azimuth step must be positive");
    detail::require(localization.options.f_max > localization.options.f_min, "SRP-PHAT f_max must exceed f_min");
  }
};

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read_opt(const Json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

/// {"positions": [[x,y,z], ...], "speed_of_sound": 343}
inline ArrayGeometry geometry_from_json(const Json& j) {
  detail::check_keys(j, {"positions", "speed_of_sound"}, "geometry");
  if (!j.contains("positions") || !j.at("positions").is_array())
    throw ConfigError("geometry: 'positions' must be a list of [x, y, z]");
  std::vector<Vec3> pos;
  for (const auto& p : j.at("positions")) {
    if (!p.is_array() || p.size() != 3) throw ConfigError("geometry: each position must be [x, y, z]");
    try {
      pos.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("geometry: ") + e.what());
    }
  }
  double c = kDefaultSpeedOfSound;
  detail::read_opt(j, "speed_of_sound", c, "geometry");
  try {
    return ArrayGeometry(std::move(pos), c);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
}

/// Accepts {"start": s, "end": e} or {"pre_utterance": len, "utterance_start": t}.
inline NoiseContext noise_context_from_json(const Json& j) {
  detail::check_keys(j, {"start", "end", "pre_utterance", "utterance_start"}, "noise_context");
  NoiseContext ctx;
  if (j.contains("pre_utterance")) {
    if (j.contains("start") || j.contains("end"))
      throw ConfigError("noise_context: give either start/end or pre_utterance, not both");
    double len = 0.0, utt = 0.0;
    detail::read_opt(j, "pre_utterance", len, "noise_context");
    detail::read_opt(j, "utterance_start", utt, "noise_context");
    if (len <= 0.0) throw ConfigError("noise_context.pre_utterance must be positive");
    if (!j.contains("utterance_start")) utt = len;
    ctx.start = utt - len;
    ctx.end = utt;
  } else {
    detail::read_opt(j, "start", ctx.start, "noise_context");
    detail::read_opt(j, "end", ctx.end, "noise_context");
  }
  return ctx;
}

/// Either a list of booleans or {"failed": [indices]} given the channel count.
inline ChannelMask channel_mask_from_json(const Json& j, std::size_t num_channels) {
  if (j.is_array()) {
    std::vector<bool> active;
    for (const auto& v : j) {
      if (!v.is_boolean()) throw ConfigError("channel_mask: list entries must be booleans");
      active.push_back(v.get<bool>());
    }
    return ChannelMask(std::move(active));
  }
  detail::check_keys(j, {"failed"}, "channel_mask");
  auto mask = ChannelMask::all(num_channels);
  for (const auto& v : j.value("failed", Json::array())) {
    if (!v.is_number_unsigned() || v.get<std::size_t>() >= num_channels)
      throw ConfigError("channel_mask.failed: index out of range");
    mask.set(v.get<std::size_t>(), false);
  }
  return mask;
}

inline PipelineConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  detail::check_keys(j,
                     {"geometry", "geometry_file", "frame", "postfilter", "beamformer", "forgetting_factor",
                      "cdr_max", "noise_context", "doa", "channel_mask", "export"},
                     "config");
  PipelineConfig cfg;
  if (j.contains("geometry") == j.contains("geometry_file"))
    throw ConfigError("config: exactly one of 'geometry' or 'geometry_file' is required");
  if (j.contains("geometry")) {
    cfg.geometry = geometry_from_json(j.at("geometry"));
  } else {
    const auto path = detail::resolve(base_dir, j.at("geometry_file").get<std::string>());
    cfg.geometry = geometry_from_json(detail::read_json_file(path));
  }

  if (j.contains("frame")) {
    const auto& f = j.at("frame");
    detail::check_keys(f, {"frame_len", "sample_rate", "window"}, "frame");
    detail::read_opt(f, "frame_len", cfg.frame.frame_len, "frame");
    detail::read_opt(f, "sample_rate", cfg.frame.sample_rate, "frame");
    if (f.contains("window") && f.at("window") != "sine") throw ConfigError("frame.window: only 'sine' is supported");
  }
  if (j.contains("postfilter")) {
    const auto& p = j.at("postfilter");
    detail::check_keys(p, {"enabled", "mu", "g_min", "gain_smoothing"}, "postfilter");
    detail::read_opt(p, "enabled", cfg.postfilter_enabled, "postfilter");
    detail::read_opt(p, "mu", cfg.postfilter.mu, "postfilter");
    detail::read_opt(p, "g_min", cfg.postfilter.g_min, "postfilter");
    detail::read_opt(p, "gain_smoothing", cfg.postfilter.gain_smoothing, "postfilter");
  }
  if (j.contains("beamformer")) {
    const auto& b = j.at("beamformer");
    detail::check_keys(b, {"enabled", "diagonal_loading", "reference_channel"}, "beamformer");
    detail::read_opt(b, "enabled", cfg.beamformer_enabled, "beamformer");
    detail::read_opt(b, "diagonal_loading", cfg.diagonal_loading, "beamformer");
    detail::read_opt(b, "reference_channel", cfg.reference_channel, "beamformer");
  }
  detail::read_opt(j, "forgetting_factor", cfg.forgetting_factor, "config");
  detail::read_opt(j, "cdr_max", cfg.cdr_max, "config");
  if (j.contains("noise_context")) cfg.noise_context = noise_context_from_json(j.at("noise_context"));
  if (j.contains("doa")) {
    const auto& d = j.at("doa");
    detail::check_keys(d, {"mode", "azimuth_deg", "elevation_deg", "azimuth_step_deg", "elevations_deg", "f_min", "f_max"},
                       "doa");
    std::string mode = "fixed";
    detail::read_opt(d, "mode", mode, "doa");
    if (mode == "fixed") {
      cfg.doa_mode = DoaMode::Fixed;
    } else if (mode == "srp-phat") {
      cfg.doa_mode = DoaMode::SrpPhat;
    } else {
      throw ConfigError("doa.mode must be 'fixed' or 'srp-phat'");
    }
    double az = cfg.doa.azimuth_deg(), el = cfg.doa.elevation_deg();
    detail::read_opt(d, "azimuth_deg", az, "doa");
    detail::read_opt(d, "elevation_deg", el, "doa");
    try {
      cfg.doa = DoA::from_degrees(az, el);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("doa: ") + e.what());
    }
    detail::read_opt(d, "azimuth_step_deg", cfg.localization.azimuth_step_deg, "doa");
    detail::read_opt(d, "elevations_deg", cfg.localization.elevations_deg, "doa");
    detail::read_opt(d, "f_min", cfg.localization.options.f_min, "doa");
    detail::read_opt(d, "f_max", cfg.localization.options.f_max, "doa");
  }
  if (j.contains("channel_mask")) cfg.channel_mask = channel_mask_from_json(j.at("channel_mask"), cfg.geometry.size());
  if (j.contains("export")) {
    const auto& e = j.at("export");
    detail::check_keys(e, {"dir", "beamformer_spectrogram", "output_spectrogram", "diffuseness", "gains", "pseudo_spectrum"},
                       "export");
    std::string dir;
    detail::read_opt(e, "dir", dir, "export");
    if (!dir.empty()) cfg.exports.dir = detail::resolve(base_dir, dir);
    detail::read_opt(e, "beamformer_spectrogram", cfg.exports.beamformer_spectrogram, "export");
    detail::read_opt(e, "output_spectrogram", cfg.exports.output_spectrogram, "export");
    detail::read_opt(e, "diffuseness", cfg.exports.diffuseness, "export");
    detail::read_opt(e, "gains", cfg.exports.gains, "export");
    detail::read_opt(e, "pseudo_spectrum", cfg.exports.pseudo_spectrum, "export");
  }
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(detail::read_json_file(path), path.parent_path());
}

/// Scene description for the simulator:
/// {"geometry"|"geometry_file", "doa": {"azimuth_deg","elevation_deg"}, "duration",
///  "sample_rate", "source_onset", "direct_to_diffuse_db", "sensor_noise_db",
///  "diffuse_directions", "seed", "frame_len", "forgetting_factor", "cdr_max"}
inline SceneSpec scene_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  detail::check_keys(j,
                     {"geometry", "geometry_file", "doa", "duration", "sample_rate", "source_onset",
                      "direct_to_diffuse_db", "sensor_noise_db", "diffuse_directions", "seed", "frame_len",
                      "forgetting_factor", "cdr_max"},
                     "scene");
  SceneSpec spec;
  if (j.contains("geometry") == j.contains("geometry_file"))
    throw ConfigError("scene: exactly one of 'geometry' or 'geometry_file' is required");
  spec.geometry = j.contains("geometry")
                      ? geometry_from_json(j.at("geometry"))
                      : geometry_from_json(detail::read_json_file(
                            detail::resolve(base_dir, j.at("geometry_file").get<std::string>())));
  if (j.contains("doa")) {
    const auto& d = j.at("doa");
    detail::check_keys(d, {"azimuth_deg", "elevation_deg"}, "scene.doa");
    double az = 90.0, el = 90.0;
    detail::read_opt(d, "azimuth_deg", az, "scene.doa");
    detail::read_opt(d, "elevation_deg", el, "scene.doa");
    spec.source_doa = DoA::from_degrees(az, el);
  }
  detail::read_opt(j, "duration", spec.duration, "scene");
  detail::read_opt(j, "sample_rate", spec.sample_rate, "scene");
  detail::read_opt(j, "source_onset", spec.source_onset, "scene");
  if (j.contains("direct_to_diffuse_db") && !j.at("direct_to_diffuse_db").is_null())
    spec.direct_to_diffuse_db = j.at("direct_to_diffuse_db").get<double>();
  if (j.contains("sensor_noise_db") && !j.at("sensor_noise_db").is_null())
    spec.sensor_noise_db = j.at("sensor_noise_db").get<double>();
  detail::read_opt(j, "diffuse_directions", spec.diffuse_directions, "scene");
  detail::read_opt(j, "seed", spec.seed, "scene");
  detail::read_opt(j, "frame_len", spec.frame.frame_len, "scene");
  spec.frame.sample_rate = spec.sample_rate;
  detail::read_opt(j, "forgetting_factor", spec.forgetting_factor, "scene");
  detail::read_opt(j, "cdr_max", spec.cdr_max, "scene");
  return spec;
}

}  // namespace cdrfe
