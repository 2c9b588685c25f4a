#pragma once

// Synthetic acoustic scenes with ground truth: a far-field point source, a
// spherically isotropic diffuse field and spatially white sensor noise.
//
// Propagation is a phase ramp applied to the DFT of the whole signal, i.e. an
// exact band-limited (circular) fractional delay per microphone. The diffuse
// field is a superposition of independent white-noise plane waves arriving
// from a Fibonacci lattice on the unit sphere.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cdrfe/cdr.hpp"
#include "cdrfe/error.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/spectral_stats.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

namespace detail {

/// Adds the spectrum `src` (of a length-T real signal), delayed by each
/// microphone's plane-wave lead u.p_n / c, into the per-channel spectra `acc`.
inline void add_plane_wave(std::span<const Complex> src, const Vec3& direction, const ArrayGeometry& geom,
                           double sample_rate, std::size_t num_samples, std::vector<std::vector<Complex>>& acc) {
  const double omega_step = 2.0 * std::numbers::pi * sample_rate / static_cast<double>(num_samples);
  constexpr std::size_t kResync = 1024;
  for (std::size_t n = 0; n < geom.size(); ++n) {
    const double lead = direction.dot(geom.position(n)) / geom.speed_of_sound();
    const Complex step = std::polar(1.0, omega_step * lead);
    Complex phase{1.0, 0.0};
    auto& out = acc[n];
    for (std::size_t f = 0; f < src.size(); ++f) {
      if (f % kResync == 0) phase = std::polar(1.0, omega_step * lead * static_cast<double>(f));
      out[f] += src[f] * phase;
      phase *= step;
    }
  }
}

inline Signal spectra_to_signal(const std::vector<std::vector<Complex>>& spectra, std::size_t num_samples) {
  Signal out(static_cast<Eigen::Index>(num_samples), static_cast<Eigen::Index>(spectra.size()));
  std::vector<double> buf(num_samples);
  for (std::size_t n = 0; n < spectra.size(); ++n) {
    irfft(spectra[n], buf);
    for (std::size_t t = 0; t < num_samples; ++t) out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) = buf[t];
  }
  return out;
}

inline double mean_channel_power(const Signal& x) {
  if (x.size() == 0) return 0.0;
  return x.squaredNorm() / static_cast<double>(x.size());
}

}  // namespace detail

/// `count` quasi-uniform unit vectors on the sphere (Fibonacci lattice).
inline std::vector<Vec3> fibonacci_sphere(std::size_t count) {
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> dirs;
  dirs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(k);
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

/// Plane wave from `doa` carrying `source`; column n is the signal at mic n.
inline Signal generate_point_source(const ArrayGeometry& geom, const DoA& doa, const Eigen::VectorXd& source,
                                    double sample_rate) {
  detail::require(source.size() > 0, "generate_point_source: empty source signal");
  detail::require(sample_rate > 0.0, "sample rate must be positive");
  const auto len = static_cast<std::size_t>(source.size());
  std::vector<Complex> spec(len / 2 + 1);
  rfft(std::span<const double>(source.data(), len), spec);
  std::vector<std::vector<Complex>> acc(geom.size(), std::vector<Complex>(spec.size()));
  detail::add_plane_wave(spec, doa.unit_vector(), geom, sample_rate, len, acc);
  return detail::spectra_to_signal(acc, len);
}

/// Spherically isotropic noise built from `num_directions` independent white
/// plane waves, scaled to unit mean channel power.
inline Signal generate_diffuse_field(const ArrayGeometry& geom, std::size_t num_samples, double sample_rate,
                                     std::size_t num_directions, std::uint64_t seed) {
  detail::require(num_samples > 0, "generate_diffuse_field: zero length");
  detail::require(num_directions >= 1, "generate_diffuse_field: need at least one direction");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto dirs = fibonacci_sphere(num_directions);

  std::vector<double> noise(num_samples);
  std::vector<Complex> spec(num_samples / 2 + 1);
  std::vector<std::vector<Complex>> acc(geom.size(), std::vector<Complex>(spec.size()));
  for (const auto& u : dirs) {
    for (double& v : noise) v = normal(rng);
    rfft(noise, spec);
    detail::add_plane_wave(spec, u, geom, sample_rate, num_samples, acc);
  }
  Signal out = detail::spectra_to_signal(acc, num_samples);
  const double p = detail::mean_channel_power(out);
  if (p > 0.0) out /= std::sqrt(p);
  return out;
}

struct SceneSpec {
  ArrayGeometry geometry;
  DoA source_doa;
  /// Source waveform. When absent, seeded white noise fills `duration`.
  std::optional<Eigen::VectorXd> source;
  double duration = 5.0;
  double sample_rate = 16000.0;
  /// Seconds of silence before the source starts.
  double source_onset = 0.0;
  /// Direct-to-diffuse power ratio in dB over the full signal; none = no diffuse field.
  std::optional<double> direct_to_diffuse_db;
  /// Sensor noise power in dB relative to the source; none = no sensor noise.
  std::optional<double> sensor_noise_db;
  std::size_t diffuse_directions = 128;
  std::uint64_t seed = 1;
  /// Framing and smoothing used for the ground-truth CDR maps.
  FrameParams frame;
  double forgetting_factor = kDefaultForgettingFactor;
  double cdr_max = kDefaultCdrMax;
};

struct GroundTruth {
  /// Direct / diffuse PSD ratio per (frame, bin), both PSDs recursively
  /// averaged and averaged over channels. cdr_max where there is no diffuse sound.
  Eigen::MatrixXd cdr;
  /// Long-term direct / diffuse PSD ratio per bin.
  Eigen::VectorXd cdr_per_bin;
  /// STFT of the clean source as seen at the array origin [L x F].
  Eigen::MatrixXcd source_stft;
  DoA doa;
};

struct Scene {
  Signal mixture;
  Signal direct;
  Signal diffuse;
  Signal sensor;
  Eigen::VectorXd source;  // source waveform at the array origin, onset included
  GroundTruth truth;
};

namespace detail {

inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> true_cdr_maps(const Signal& direct, const Signal& diffuse,
                                                                 bool has_diffuse, const SceneSpec& spec) {
  const auto xd = analyze(direct, spec.frame);
  const auto xn = analyze(diffuse, spec.frame);
  const auto frames = static_cast<Eigen::Index>(xd.num_frames());
  const auto bins = static_cast<Eigen::Index>(xd.num_bins());
  Eigen::MatrixXd cdr(frames, bins);
  Eigen::VectorXd long_direct = Eigen::VectorXd::Zero(bins), long_diffuse = Eigen::VectorXd::Zero(bins);
  Eigen::VectorXd sm_direct = Eigen::VectorXd::Zero(bins), sm_diffuse = Eigen::VectorXd::Zero(bins);
  const double lam = spec.forgetting_factor;
  const double chans = static_cast<double>(xd.num_channels());
  for (Eigen::Index l = 0; l < frames; ++l)
    for (Eigen::Index f = 0; f < bins; ++f) {
      const auto lu = static_cast<std::size_t>(l), fu = static_cast<std::size_t>(f);
      const double pd = xd.snapshot(lu, fu).squaredNorm() / chans;
      const double pn = xn.snapshot(lu, fu).squaredNorm() / chans;
      long_direct(f) += pd;
      long_diffuse(f) += pn;
      sm_direct(f) = l == 0 ? pd : lam * sm_direct(f) + (1.0 - lam) * pd;
      sm_diffuse(f) = l == 0 ? pn : lam * sm_diffuse(f) + (1.0 - lam) * pn;
      cdr(l, f) = has_diffuse && sm_diffuse(f) > 0.0 ? clamp_cdr(sm_direct(f) / sm_diffuse(f), spec.cdr_max)
                                                      : spec.cdr_max;
    }
  Eigen::VectorXd per_bin(bins);
  for (Eigen::Index f = 0; f < bins; ++f)
    per_bin(f) = has_diffuse && long_diffuse(f) > 0.0 ? clamp_cdr(long_direct(f) / long_diffuse(f), spec.cdr_max)
                                                      : spec.cdr_max;
  return {std::move(cdr), std::move(per_bin)};
}

}  // namespace detail

/// x = direct + diffuse + sensor noise at the requested power ratios.
inline Scene mix_scene(const SceneSpec& spec) {
  detail::require(spec.sample_rate > 0.0, "scene sample rate must be positive");
  detail::require(spec.source_onset >= 0.0, "source onset must be non-negative");
  if (spec.direct_to_diffuse_db) detail::require(std::isfinite(*spec.direct_to_diffuse_db), "diffuse ratio must be finite");
  if (spec.sensor_noise_db) detail::require(std::isfinite(*spec.sensor_noise_db), "sensor noise level must be finite");
  spec.frame.validate();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto onset = static_cast<std::size_t>(std::llround(spec.source_onset * spec.sample_rate));

  Eigen::VectorXd source;
  if (spec.source) {
    detail::require(spec.source->size() > 0, "scene source signal is empty");
    source = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(onset) + spec.source->size());
    source.tail(spec.source->size()) = *spec.source;
  } else {
    detail::require(spec.duration > 0.0, "scene duration must be positive");
    const auto total = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
    detail::require(total > onset, "source onset exceeds scene duration");
    source = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
    for (std::size_t t = onset; t < total; ++t) source(static_cast<Eigen::Index>(t)) = normal(rng);
  }
  const auto len = static_cast<std::size_t>(source.size());
  const auto& geom = spec.geometry;
  const auto chans = static_cast<Eigen::Index>(geom.size());

  Scene scene;
  scene.direct = generate_point_source(geom, spec.source_doa, source, spec.sample_rate);
  const double direct_power = detail::mean_channel_power(scene.direct);

  scene.diffuse = Signal::Zero(static_cast<Eigen::Index>(len), chans);
  if (spec.direct_to_diffuse_db) {
    scene.diffuse = generate_diffuse_field(geom, len, spec.sample_rate, spec.diffuse_directions, rng());
    scene.diffuse *= std::sqrt(direct_power * std::pow(10.0, -*spec.direct_to_diffuse_db / 10.0));
  }

  scene.sensor = Signal::Zero(static_cast<Eigen::Index>(len), chans);
  if (spec.sensor_noise_db) {
    for (Eigen::Index n = 0; n < chans; ++n)
      for (Eigen::Index t = 0; t < scene.sensor.rows(); ++t) scene.sensor(t, n) = normal(rng);
    const double p = detail::mean_channel_power(scene.sensor);
    scene.sensor *= std::sqrt(direct_power * std::pow(10.0, *spec.sensor_noise_db / 10.0) / p);
  }

  scene.mixture = scene.direct + scene.diffuse + scene.sensor;
  scene.source = source;

  if (len >= spec.frame.frame_len) {
    auto [cdr, per_bin] = detail::true_cdr_maps(scene.direct, scene.diffuse, spec.direct_to_diffuse_db.has_value(), spec);
    scene.truth.cdr = std::move(cdr);
    scene.truth.cdr_per_bin = std::move(per_bin);
    Signal mono = source;
    scene.truth.source_stft = analyze(mono, spec.frame).channel(0);
  }
  scene.truth.doa = spec.source_doa;
  return scene;
}

}  // namespace cdrfe
