// Command-line front-end: enhance single files or a batch manifest, and
// generate simulated scenes.
//
// Exit status: 0 success, 1 an utterance failed, 2 configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cdrfe/cdrfe.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::optional<double> mu, g_min, lambda, loading, cdr_max, gain_smoothing;
  std::vector<double> doa;      // az, el in degrees
  std::vector<double> context;  // start, end in seconds
  std::vector<int> mask;        // 1/0 per channel
  bool srp_phat = false;
  bool no_postfilter = false;
  bool no_beamformer = false;
  std::string export_dir;
  std::vector<std::string> exports;

  void add_to(CLI::App* app) {
    app->add_option("--mu", mu, "Overestimation factor");
    app->add_option("--g-min", g_min, "Gain floor");
    app->add_option("--lambda", lambda, "Forgetting factor of the coherence estimate");
    app->add_option("--loading", loading, "Diagonal loading of the noise covariance");
    app->add_option("--cdr-max", cdr_max, "Upper clamp of CDR estimates");
    app->add_option("--gain-smoothing", gain_smoothing, "Recursive gain smoothing in [0, 1)");
    app->add_option("--doa", doa, "Fixed look direction: azimuth,elevation (degrees)")->delimiter(',')->expected(2);
    app->add_flag("--srp-phat", srp_phat, "Estimate the look direction with SRP-PHAT");
    app->add_option("--context", context, "Noise context interval: start,end (seconds)")->delimiter(',')->expected(2);
    app->add_option("--mask", mask, "Channel mask, e.g. 1,1,0,1,1")->delimiter(',');
    app->add_flag("--no-postfilter", no_postfilter, "Disable the CDR postfilter");
    app->add_flag("--no-beamformer", no_beamformer, "Pass the reference channel instead of beamforming");
    app->add_option("--export-dir", export_dir, "Directory for matrix exports");
    app->add_option("--export", exports, "Matrices to export: ybf,y,diffuseness,gains,srp")
        ->delimiter(',')
        ->check(CLI::IsMember({"ybf", "y", "diffuseness", "gains", "srp"}));
  }

  void apply(cdrfe::PipelineConfig& cfg) const {
    if (mu) cfg.postfilter.mu = *mu;
    if (g_min) cfg.postfilter.g_min = *g_min;
    if (gain_smoothing) cfg.postfilter.gain_smoothing = *gain_smoothing;
    if (lambda) cfg.forgetting_factor = *lambda;
    if (loading) cfg.diagonal_loading = *loading;
    if (cdr_max) cfg.cdr_max = *cdr_max;
    if (!doa.empty()) {
      cfg.doa_mode = cdrfe::DoaMode::Fixed;
      cfg.doa = cdrfe::DoA::from_degrees(doa[0], doa[1]);
    }
    if (srp_phat) cfg.doa_mode = cdrfe::DoaMode::SrpPhat;
    if (!context.empty()) cfg.noise_context = {context[0], context[1]};
    if (!mask.empty()) {
      std::vector<bool> active;
      for (int m : mask) active.push_back(m != 0);
      cfg.channel_mask = cdrfe::ChannelMask(std::move(active));
    }
    if (no_postfilter) cfg.postfilter_enabled = false;
    if (no_beamformer) cfg.beamformer_enabled = false;
    if (!export_dir.empty()) cfg.exports.dir = export_dir;
    for (const auto& e : exports) {
      if (e == "ybf") cfg.exports.beamformer_spectrogram = true;
      if (e == "y") cfg.exports.output_spectrogram = true;
      if (e == "diffuseness") cfg.exports.diffuseness = true;
      if (e == "gains") cfg.exports.gains = true;
      if (e == "srp") cfg.exports.pseudo_spectrum = true;
    }
    try {
      cfg.validate();
    } catch (const cdrfe::InvalidArgument& e) {
      throw cdrfe::ConfigError(std::string("config: ") + e.what());
    }
  }
};

void emit_report(const cdrfe::Json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    cdrfe::io::write_file(path, j.dump(2) + "\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multichannel MVDR + coherence-based postfilter speech enhancement front-end"};
  app.require_subcommand(1);

  std::string config_path, input_path, output_path, manifest_path, report_path;
  Overrides ov;

  auto* run_cmd = app.add_subcommand("run", "Enhance one multichannel WAV file");
  run_cmd->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();
  run_cmd->add_option("-i,--input", input_path, "Multichannel input WAV")->required();
  run_cmd->add_option("-o,--output", output_path, "Enhanced mono output WAV")->required();
  run_cmd->add_option("--report", report_path, "Write the JSON report here instead of stdout");
  ov.add_to(run_cmd);

  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* batch_cmd = app.add_subcommand("batch", "Enhance every utterance of a manifest");
  batch_cmd->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();
  batch_cmd->add_option("-m,--manifest", manifest_path, "Manifest (JSON)")->required();
  batch_cmd->add_option("-j,--jobs", jobs, "Utterances processed concurrently")->check(CLI::PositiveNumber);
  batch_cmd->add_option("--report", report_path, "Write the JSON report here instead of stdout");
  ov.add_to(batch_cmd);

  std::string scene_path, truth_path, clean_path;
  std::optional<std::uint64_t> seed;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic scene with ground truth");
  sim_cmd->add_option("-c,--config", scene_path, "Scene description (JSON)")->required();
  sim_cmd->add_option("-o,--output", output_path, "Multichannel mixture WAV")->required();
  sim_cmd->add_option("--truth", truth_path, "Ground-truth CDR text matrix [frames x bins]");
  sim_cmd->add_option("--clean", clean_path, "Clean source WAV (at the array origin)");
  sim_cmd->add_option("--seed", seed, "Override the scene seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      auto cfg = cdrfe::load_config(config_path);
      ov.apply(cfg);
      const auto rep = cdrfe::run(cfg, input_path, output_path);
      emit_report(rep.to_json(), report_path);
      if (!rep.ok) std::cerr << "error: " << rep.error << '\n';
      return rep.ok ? kExitOk : kExitFailed;
    }
    if (*batch_cmd) {
      auto cfg = cdrfe::load_config(config_path);
      ov.apply(cfg);
      const auto manifest = cdrfe::load_manifest(manifest_path);
      const auto batch = cdrfe::run_batch(cfg, manifest, jobs);
      emit_report(batch.to_json(), report_path);
      for (const auto& r : batch.utterances)
        if (!r.ok) std::cerr << "error: " << r.input << ": " << r.error << '\n';
      return batch.all_ok() ? kExitOk : kExitFailed;
    }
    if (*sim_cmd) {
      const std::filesystem::path sp(scene_path);
      auto spec = cdrfe::scene_from_json(cdrfe::detail::read_json_file(sp), sp.parent_path());
      if (seed) spec.seed = *seed;
      const auto scene = cdrfe::mix_scene(spec);
      cdrfe::io::write_wav(output_path, scene.mixture, spec.sample_rate);
      if (!truth_path.empty()) cdrfe::io::write_text_matrix(truth_path, scene.truth.cdr);
      if (!clean_path.empty()) cdrfe::io::write_wav(clean_path, scene.source, spec.sample_rate);
      return kExitOk;
    }
  } catch (const cdrfe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const cdrfe::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitOk;
}
