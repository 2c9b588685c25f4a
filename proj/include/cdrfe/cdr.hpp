#pragma once

// Coherent-to-diffuse power ratio (CDR) estimation.
//
// Per microphone pair the CDR is estimated from the short-time coherence and
// the diffuse-field coherence only, without knowledge of the source direction.
// Pair estimates are merged in the diffuseness domain, D = 1/(1 + CDR), and
// the merged input CDR is mapped to the beamformer output by the diffuse-field
// gain A = w^H J_diff w of the beamformer.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cdrfe/beamformer.hpp"
#include "cdrfe/error.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/spectral_stats.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

inline constexpr double kDefaultCdrMax = 1e4;
inline constexpr double kCoherenceClip = 1.0 - 1e-9;
inline constexpr double kCorrectionFloor = 1e-6;

inline double clamp_cdr(double cdr, double cdr_max) {
  if (!(cdr > 0.0)) return 0.0;  // also maps NaN to 0
  return std::min(cdr, cdr_max);
}

/// DoA-independent CDR estimate of one microphone pair.
///
/// `gamma_x` is the measured coherence, `gamma_n` the diffuse-field coherence
/// of the pair. |gamma_x| is pulled inside the unit circle first, the square
/// root operand is floored at 0 and the result clamped to [0, cdr_max].
inline double estimate_cdr_pair(Complex gamma_x, double gamma_n, double cdr_max = kDefaultCdrMax) {
  const double mag = std::abs(gamma_x);
  if (mag > kCoherenceClip) gamma_x *= kCoherenceClip / mag;

  const double re = gamma_x.real();
  const double mag2 = std::norm(gamma_x);
  const double gn2 = gamma_n * gamma_n;
  const double radicand = gn2 * re * re - gn2 * mag2 + gn2 - 2.0 * gamma_n * re + mag2;
  const double numer = gamma_n * re - mag2 - std::sqrt(std::max(0.0, radicand));
  const double denom = mag2 - 1.0;
  return clamp_cdr(numer / denom, cdr_max);
}

/// D = 1 / (1 + CDR).
inline double diffuseness(double cdr) {
  detail::require(cdr >= 0.0, "CDR must be non-negative");
  return 1.0 / (1.0 + cdr);
}

struct InputCdr {
  double mean_diffuseness;
  double cdr;
};

/// Averages pair diffuseness values and converts the mean back to a CDR.
inline InputCdr average_input_cdr(std::span<const double> pair_cdrs, double cdr_max = kDefaultCdrMax) {
  if (pair_cdrs.empty()) throw InvalidArgument("average_input_cdr: no valid microphone pair");
  double sum = 0.0;
  for (double c : pair_cdrs) sum += diffuseness(c);
  const double mean_d = sum / static_cast<double>(pair_cdrs.size());
  return {mean_d, clamp_cdr((1.0 - mean_d) / mean_d, cdr_max)};
}

/// A = w^H J_diff(f) w over the active channels, floored at 1e-6.
inline double correction_factor(const Eigen::VectorXcd& w, const ArrayGeometry& geom,
                                const ChannelMask& mask, double freq) {
  detail::require_dims(static_cast<std::size_t>(w.size()) == geom.size(),
                       "weight vector length differs from microphone count");
  detail::require(w.allFinite(), "correction_factor: weights must be finite");
  const auto idx = mask.active_indices();
  const Eigen::MatrixXd j = diffuse_coherence_matrix(geom, freq, mask);
  Eigen::VectorXcd wa(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) wa(static_cast<Eigen::Index>(a)) = w(static_cast<Eigen::Index>(idx[a]));
  const Complex q = wa.dot(j.cast<Complex>() * wa);
  const double scale = std::max(std::abs(q.real()), wa.squaredNorm());
  if (std::abs(q.imag()) > 1e-9 * scale)
    throw Error("correction_factor: quadratic form is not real (internal inconsistency)");
  return std::max(q.real(), kCorrectionFloor);
}

inline double correction_factor(const BeamformerWeights& weights, const ArrayGeometry& geom,
                                std::size_t bin, const FrameParams& params) {
  return correction_factor(weights.w.at(bin), geom, weights.mask, params.bin_frequency(bin));
}

/// Diffuse-field power gain of the beamformer for every bin.
struct CorrectionFactor {
  Eigen::VectorXd a_gamma;

  static CorrectionFactor compute(const BeamformerWeights& weights, const ArrayGeometry& geom,
                                  const FrameParams& params) {
    CorrectionFactor out;
    out.a_gamma.resize(static_cast<Eigen::Index>(weights.num_bins()));
    for (std::size_t f = 0; f < weights.num_bins(); ++f)
      out.a_gamma(static_cast<Eigen::Index>(f)) = correction_factor(weights, geom, f, params);
    if (!(out.a_gamma.minCoeff() > 0.0)) throw Error("correction factor must be positive");
    return out;
  }
};

/// CDR_BF = CDR_In / A, clamped to [0, cdr_max].
inline double cdr_at_beamformer_output(double cdr_in, double a_gamma, double cdr_max = kDefaultCdrMax) {
  detail::require(a_gamma > 0.0, "correction factor must be positive");
  return clamp_cdr(cdr_in / a_gamma, cdr_max);
}

/// CDR and diffuseness maps [L x F]; diffuseness = 1/(1+cdr) elementwise.
struct CdrEstimate {
  Eigen::MatrixXd cdr;
  Eigen::MatrixXd diffuseness;

  static CdrEstimate from_cdr(Eigen::MatrixXd cdr) {
    CdrEstimate out;
    out.diffuseness = (1.0 + cdr.array()).inverse().matrix();
    out.cdr = std::move(cdr);
    return out;
  }
};

struct CdrOptions {
  double forgetting_factor = kDefaultForgettingFactor;
  double cdr_max = kDefaultCdrMax;
};

/// CDR_In(l, f) for every frame: coherence is tracked recursively over all
/// active pairs, each pair gives a CDR, diffuseness is averaged across pairs.
/// Points where no pair has a defined coherence (digital silence) are treated
/// as fully diffuse.
inline CdrEstimate estimate_input_cdr(const MultichannelSpectrum& spectrum, const ArrayGeometry& geom,
                                      const ChannelMask& mask, const CdrOptions& opts = {}) {
  detail::require_dims(mask.size() == spectrum.num_channels() && geom.size() == spectrum.num_channels(),
                       "estimate_input_cdr: geometry, mask and spectrum disagree on channel count");
  const auto pairs = mask.active_pairs();
  detail::require(!pairs.empty(), "CDR estimation needs at least 2 active channels");
  const auto& params = spectrum.params();
  const std::size_t num_bins = spectrum.num_bins();

  // Gamma_n per (bin, pair) is fixed by the geometry.
  std::vector<double> gamma_n(num_bins * pairs.size());
  for (std::size_t f = 0; f < num_bins; ++f)
    for (std::size_t p = 0; p < pairs.size(); ++p)
      gamma_n[f * pairs.size() + p] = diffuse_coherence(geom.distance(pairs[p].first, pairs[p].second),
                                                        params.bin_frequency(f), geom.speed_of_sound());

  SpectralAccumulator acc(num_bins, spectrum.num_channels(), opts.forgetting_factor);
  Eigen::MatrixXd cdr(static_cast<Eigen::Index>(spectrum.num_frames()), static_cast<Eigen::Index>(num_bins));
  std::vector<double> pair_cdr;
  pair_cdr.reserve(pairs.size());
  for (std::size_t l = 0; l < spectrum.num_frames(); ++l) {
    acc.accumulate(spectrum, l);
    for (std::size_t f = 0; f < num_bins; ++f) {
      pair_cdr.clear();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto gx = acc.coherence(pairs[p].first, pairs[p].second, f);
        if (gx) pair_cdr.push_back(estimate_cdr_pair(*gx, gamma_n[f * pairs.size() + p], opts.cdr_max));
      }
      cdr(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(f)) =
          pair_cdr.empty() ? 0.0 : average_input_cdr(pair_cdr, opts.cdr_max).cdr;
    }
  }
  return CdrEstimate::from_cdr(std::move(cdr));
}

/// Maps an input-side estimate to the beamformer output, bin by bin.
inline CdrEstimate beamformer_output_cdr(const CdrEstimate& input, const CorrectionFactor& correction,
                                         double cdr_max = kDefaultCdrMax) {
  detail::require_dims(input.cdr.cols() == correction.a_gamma.size(),
                       "CDR map and correction factor differ in bin count");
  Eigen::MatrixXd out(input.cdr.rows(), input.cdr.cols());
  for (Eigen::Index l = 0; l < out.rows(); ++l)
    for (Eigen::Index f = 0; f < out.cols(); ++f)
      out(l, f) = cdr_at_beamformer_output(input.cdr(l, f), correction.a_gamma(f), cdr_max);
  return CdrEstimate::from_cdr(std::move(out));
}

}  // namespace cdrfe
