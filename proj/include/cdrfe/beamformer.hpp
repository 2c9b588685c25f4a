#pragma once

// MVDR beamformer: w = R^{-1} d / (d^H R^{-1} d) with R the diagonally loaded
// noise covariance, evaluated per bin over the active channels.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "cdrfe/error.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/spectral_stats.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

inline constexpr double kDefaultDiagonalLoading = 1e-3;

/// Per-bin weights. Each vector has one entry per microphone; inactive
/// channels carry exactly zero.
struct BeamformerWeights {
  std::vector<Eigen::VectorXcd> w;
  ChannelMask mask;
  DoA doa;

  std::size_t num_bins() const { return w.size(); }
};

/// Look-direction vectors d(f) for every bin of `params`.
inline std::vector<Eigen::VectorXcd> steering_vectors(const ArrayGeometry& geom, const DoA& doa,
                                                      const FrameParams& params) {
  std::vector<Eigen::VectorXcd> d;
  d.reserve(params.num_bins());
  for (std::size_t f = 0; f < params.num_bins(); ++f)
    d.push_back(steering_vector(geom, doa, params.bin_frequency(f)));
  return d;
}

/// Minimum-variance distortionless weights. The loaded matrix is
/// S_nn + loading * tr(S_nn)/Na * I; a loading of 0 gives the plain solution
/// and throws NumericalError when S_nn is singular.
inline BeamformerWeights mvdr_weights(const NoiseCovariance& noise,
                                      std::span<const Eigen::VectorXcd> steering, double loading,
                                      const DoA& doa = {}) {
  detail::require(loading >= 0.0, "diagonal loading must be non-negative");
  detail::require_dims(steering.size() == noise.num_bins(),
                       "steering vectors and noise covariance differ in bin count");
  const auto idx = noise.mask.active_indices();
  detail::require(idx.size() >= 2, "MVDR needs at least 2 active channels");
  const auto na = static_cast<Eigen::Index>(idx.size());
  const auto n_total = static_cast<Eigen::Index>(noise.mask.size());

  BeamformerWeights out;
  out.mask = noise.mask;
  out.doa = doa;
  out.w.reserve(steering.size());
  Eigen::VectorXcd d(na);
  for (std::size_t f = 0; f < steering.size(); ++f) {
    detail::require_dims(steering[f].size() == n_total, "steering vector length differs from mask");
    const auto& s = noise.s_nn[f];
    detail::require_dims(s.rows() == na && s.cols() == na, "noise covariance has wrong size");
    for (Eigen::Index a = 0; a < na; ++a) d(a) = steering[f](static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]));

    Eigen::MatrixXcd r = s;
    const double load = loading * s.trace().real() / static_cast<double>(na);
    r.diagonal().array() += load;
    Eigen::LLT<Eigen::MatrixXcd> llt(r);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
      throw NumericalError("noise covariance at bin " + std::to_string(f) +
                           " is singular; raise the diagonal loading");
    const Eigen::VectorXcd z = llt.solve(d);
    // w = z / conj(z^H d) makes w^H d = 1 up to a single rounding.
    const Complex denom = std::conj(z.dot(d));
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n_total);
    for (Eigen::Index a = 0; a < na; ++a) w(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)])) = z(a) / denom;
    if (!w.allFinite()) throw NumericalError("non-finite MVDR weights at bin " + std::to_string(f));
    out.w.push_back(std::move(w));
  }
  return out;
}

/// Y_BF(l, f) = w(f)^H x(l, f); result is [L x F].
inline Eigen::MatrixXcd apply(const BeamformerWeights& weights, const MultichannelSpectrum& spectrum) {
  detail::require_dims(weights.mask.size() == spectrum.num_channels(),
                       "beamformer mask and spectrum differ in channel count");
  detail::require_dims(weights.num_bins() == spectrum.num_bins(),
                       "beamformer weights and spectrum differ in bin count");
  const auto idx = weights.mask.active_indices();
  Eigen::MatrixXcd y(static_cast<Eigen::Index>(spectrum.num_frames()),
                     static_cast<Eigen::Index>(spectrum.num_bins()));
  for (std::size_t l = 0; l < spectrum.num_frames(); ++l)
    for (std::size_t f = 0; f < spectrum.num_bins(); ++f) {
      Complex acc{};
      const auto& w = weights.w[f];
      // Masked channels are skipped, not multiplied by zero, so their content
      // (even non-finite) cannot leak into the output.
      for (std::size_t n : idx) acc += std::conj(w(static_cast<Eigen::Index>(n))) * spectrum(l, f, n);
      y(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(f)) = acc;
    }
  return y;
}

}  // namespace cdrfe
