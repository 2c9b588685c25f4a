#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "cdrfe/error.hpp"

namespace cdrfe {

struct PostfilterParams {
  double mu = 1.3;     // overestimation factor; 0 disables suppression
  double g_min = 0.1;  // gain floor
  /// First-order recursive smoothing of the gain over frames, in [0, 1).
  /// 0 (default) leaves the gains unsmoothed.
  double gain_smoothing = 0.0;

  void validate() const {
    detail::require(std::isfinite(mu) && mu >= 0.0, "mu must be >= 0");
    detail::require(g_min > 0.0 && g_min < 1.0, "g_min must lie in (0, 1)");
    detail::require(gain_smoothing >= 0.0 && gain_smoothing < 1.0, "gain_smoothing must lie in [0, 1)");
  }

  /// Smallest SNR whose gain rises above the floor.
  double floor_threshold() const { return mu / (1.0 - g_min) - 1.0; }
};

/// G = max(1 - mu / (1 + snr), g_min).
inline double wiener_gain(double snr, const PostfilterParams& params) {
  detail::require(snr >= 0.0, "wiener_gain: snr must be >= 0");
  return std::max(1.0 - params.mu / (1.0 + snr), params.g_min);
}

/// Real gain matrix G(l, f) in [g_min, 1].
struct GainMask {
  Eigen::MatrixXd g;
};

/// Gains from an SNR (here: beamformer-output CDR) map [L x F].
inline GainMask compute_gains(const Eigen::MatrixXd& snr, const PostfilterParams& params) {
  params.validate();
  GainMask out{Eigen::MatrixXd(snr.rows(), snr.cols())};
  for (Eigen::Index l = 0; l < snr.rows(); ++l)
    for (Eigen::Index f = 0; f < snr.cols(); ++f) {
      const double g = wiener_gain(snr(l, f), params);
      out.g(l, f) = (params.gain_smoothing > 0.0 && l > 0)
                        ? params.gain_smoothing * out.g(l - 1, f) + (1.0 - params.gain_smoothing) * g
                        : g;
    }
  return out;
}

/// Y(l, f) = G(l, f) Y_BF(l, f).
inline Eigen::MatrixXcd apply_gain(const Eigen::MatrixXcd& y_bf, const GainMask& mask) {
  detail::require_dims(y_bf.rows() == mask.g.rows() && y_bf.cols() == mask.g.cols(),
                       "apply_gain: gain mask and spectrum differ in shape");
  return (y_bf.array() * mask.g.array().cast<std::complex<double>>()).matrix();
}

}  // namespace cdrfe
