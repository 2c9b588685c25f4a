#pragma once

// Recursively averaged auto/cross power spectra, short-time coherence and the
// block-averaged noise covariance taken from a pre-utterance context.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "cdrfe/error.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

inline constexpr double kDefaultForgettingFactor = 0.68;

/// Phi(l, f) = lambda Phi(l-1, f) + (1 - lambda) x x^H, with Phi(0) = x x^H.
/// Holds the full N x N matrix for every bin.
class SpectralAccumulator {
 public:
  SpectralAccumulator(std::size_t num_bins, std::size_t num_channels,
                      double forgetting_factor = kDefaultForgettingFactor)
      : lambda_(forgetting_factor),
        psd_(num_bins, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(num_channels),
                                              static_cast<Eigen::Index>(num_channels))) {
    detail::require(forgetting_factor >= 0.0 && forgetting_factor < 1.0,
                    "forgetting factor must lie in [0, 1)");
    detail::require(num_channels >= 1 && num_bins >= 1, "accumulator needs >= 1 bin and channel");
  }

  std::size_t num_bins() const { return psd_.size(); }
  std::size_t num_channels() const { return static_cast<std::size_t>(psd_.front().rows()); }
  double forgetting_factor() const { return lambda_; }
  std::size_t frame_count() const { return frames_; }

  /// `frame` is [F x N]: one STFT frame of every channel.
  void accumulate(const Eigen::MatrixXcd& frame) {
    detail::require_dims(static_cast<std::size_t>(frame.rows()) == num_bins() &&
                             static_cast<std::size_t>(frame.cols()) == num_channels(),
                         "accumulate: frame must be [bins x channels]");
    for (std::size_t f = 0; f < psd_.size(); ++f)
      update_bin(f, frame.row(static_cast<Eigen::Index>(f)).transpose());
    ++frames_;
  }

  /// Feeds frame l of a spectrum without copying it into an [F x N] matrix first.
  void accumulate(const MultichannelSpectrum& spectrum, std::size_t l) {
    detail::require_dims(spectrum.num_bins() == num_bins() && spectrum.num_channels() == num_channels(),
                         "accumulate: spectrum dimensions differ from accumulator");
    for (std::size_t f = 0; f < psd_.size(); ++f) update_bin(f, spectrum.snapshot(l, f));
    ++frames_;
  }

  const Eigen::MatrixXcd& psd(std::size_t f) const { return psd_.at(f); }

  /// Gamma_x = Phi_nm / sqrt(Phi_nn Phi_mm), with Phi_nm = E[X_n X_m^*].
  /// Empty when either auto-spectrum is zero.
  std::optional<Complex> coherence(std::size_t n, std::size_t m, std::size_t f) const {
    const auto& p = psd_.at(f);
    const auto ni = static_cast<Eigen::Index>(n), mi = static_cast<Eigen::Index>(m);
    const double pnn = p(ni, ni).real(), pmm = p(mi, mi).real();
    if (!(pnn > 0.0) || !(pmm > 0.0)) return std::nullopt;
    return p(ni, mi) / std::sqrt(pnn * pmm);
  }

 private:
  template <typename Vec>
  void update_bin(std::size_t f, const Vec& x) {
    auto& p = psd_[f];
    const auto n = p.rows();
    const bool first = frames_ == 0;
    const double a = first ? 0.0 : lambda_;
    const double b = first ? 1.0 : 1.0 - lambda_;
    // Upper triangle, mirrored, so Hermitian symmetry is exact.
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i, i) = Complex(a * p(i, i).real() + b * std::norm(x(i)), 0.0);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        p(i, j) = a * p(i, j) + b * x(i) * std::conj(x(j));
        p(j, i) = std::conj(p(i, j));
      }
    }
  }

  double lambda_;
  std::vector<Eigen::MatrixXcd> psd_;
  std::size_t frames_ = 0;
};

/// Spatio-spectral noise covariance per bin over the active channels only.
struct NoiseCovariance {
  std::vector<Eigen::MatrixXcd> s_nn;  // [F] of [Na x Na]
  ChannelMask mask;
  std::size_t context_frames = 0;

  std::size_t num_bins() const { return s_nn.size(); }
};

/// Recommended context duration range in seconds; outside it a warning is due.
inline constexpr double kMinContextSeconds = 0.4;
inline constexpr double kMaxContextSeconds = 0.8;

/// Returns a warning message if `num_frames` of context span a duration outside
/// the recommended 400-800 ms window.
inline std::optional<std::string> context_duration_warning(std::size_t num_frames,
                                                           const FrameParams& params) {
  if (num_frames == 0) return std::nullopt;
  const double seconds =
      static_cast<double>((num_frames - 1) * params.hop() + params.frame_len) / params.sample_rate;
  if (seconds < kMinContextSeconds - 1e-9 || seconds > kMaxContextSeconds + 1e-9)
    return "noise context spans " + std::to_string(seconds) + " s, outside the recommended 0.4-0.8 s";
  return std::nullopt;
}

/// S_nn(f) = (1/L) sum_l x(l,f) x(l,f)^H over every frame of `context`.
inline NoiseCovariance estimate_noise_covariance(const MultichannelSpectrum& context,
                                                 const ChannelMask& mask) {
  detail::require(context.num_frames() >= 1, "noise context is empty");
  detail::require_dims(mask.size() == context.num_channels(), "mask size differs from channel count");
  const auto idx = mask.active_indices();
  detail::require(!idx.empty(), "no active channels");
  const auto na = static_cast<Eigen::Index>(idx.size());

  NoiseCovariance out;
  out.mask = mask;
  out.context_frames = context.num_frames();
  out.s_nn.assign(context.num_bins(), Eigen::MatrixXcd::Zero(na, na));
  Eigen::VectorXcd x(na);
  const double scale = 1.0 / static_cast<double>(context.num_frames());
  for (std::size_t f = 0; f < context.num_bins(); ++f) {
    auto& s = out.s_nn[f];
    for (std::size_t l = 0; l < context.num_frames(); ++l) {
      for (Eigen::Index a = 0; a < na; ++a) x(a) = context(l, f, idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = i; j < na; ++j) s(i, j) += x(i) * std::conj(x(j));
    }
    for (Eigen::Index i = 0; i < na; ++i) {
      s(i, i) = Complex(s(i, i).real() * scale, 0.0);
      for (Eigen::Index j = i + 1; j < na; ++j) {
        s(i, j) *= scale;
        s(j, i) = std::conj(s(i, j));
      }
    }
  }
  return out;
}

}  // namespace cdrfe
