#pragma once

// SRP-PHAT grid search. The PHAT-weighted cross spectra are summed over frames
// once per (pair, bin); each candidate then only needs a phase-steered sum over
// bins, which is algebraically identical to steering every frame.

#include <Eigen/Dense>

#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cdrfe/error.hpp"
#include "cdrfe/geometry.hpp"
#include "cdrfe/stft.hpp"

namespace cdrfe {

/// Candidate directions on an elevation x azimuth grid (degrees).
class DoAGrid {
 public:
  DoAGrid(std::vector<double> azimuths_deg, std::vector<double> elevations_deg)
      : azimuths_(std::move(azimuths_deg)), elevations_(std::move(elevations_deg)) {
    detail::require(!azimuths_.empty() && !elevations_.empty(), "DoA grid must be non-empty");
    for (double el : elevations_) {
      for (double az : azimuths_) candidates_.push_back(DoA::from_degrees(az, el));
    }
  }

  /// Azimuth start..stop (inclusive where it lands on a step) at fixed elevations.
  static DoAGrid uniform(double azimuth_step_deg, std::vector<double> elevations_deg = {90.0},
                         double azimuth_start_deg = 0.0, double azimuth_stop_deg = 360.0) {
    detail::require(azimuth_step_deg > 0.0, "azimuth step must be positive");
    std::vector<double> az;
    for (std::size_t i = 0;; ++i) {
      const double a = azimuth_start_deg + static_cast<double>(i) * azimuth_step_deg;
      if (a >= azimuth_stop_deg - 1e-9) break;
      az.push_back(a);
    }
    return DoAGrid(std::move(az), std::move(elevations_deg));
  }

  const std::vector<double>& azimuths_deg() const { return azimuths_; }
  const std::vector<double>& elevations_deg() const { return elevations_; }
  const std::vector<DoA>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }

 private:
  std::vector<double> azimuths_;
  std::vector<double> elevations_;
  std::vector<DoA> candidates_;
};

struct SrpPhatOptions {
  double f_min = 125.0;
  double f_max = 3500.0;
};

struct SrpPhatResult {
  DoA doa;
  std::size_t best_index = 0;
  /// Scores laid out [elevations x azimuths].
  Eigen::MatrixXd pseudo_spectrum;
};

inline SrpPhatResult srp_phat(const MultichannelSpectrum& spectrum, const ArrayGeometry& geom,
                              const DoAGrid& grid, const ChannelMask& mask,
                              const SrpPhatOptions& opts = {}) {
  detail::require_dims(mask.size() == spectrum.num_channels() && geom.size() == spectrum.num_channels(),
                       "srp_phat: geometry, mask and spectrum disagree on channel count");
  detail::require(spectrum.num_frames() >= 1, "srp_phat: no frames");
  const auto pairs = mask.active_pairs();
  detail::require(!pairs.empty(), "srp_phat: needs at least 2 active channels");

  const auto& params = spectrum.params();
  std::vector<std::size_t> bins;
  for (std::size_t f = 0; f < spectrum.num_bins(); ++f) {
    const double hz = params.bin_frequency(f);
    if (hz >= opts.f_min && hz <= opts.f_max) bins.push_back(f);
  }
  detail::require(!bins.empty(), "srp_phat: frequency range contains no bins");

  // cross[p][i] = sum_l PHAT(X_n X_m^*) at bin bins[i].
  std::vector<std::vector<Complex>> cross(pairs.size(), std::vector<Complex>(bins.size()));
  std::size_t valid_terms = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [n, m] = pairs[p];
    for (std::size_t i = 0; i < bins.size(); ++i) {
      Complex acc{};
      for (std::size_t l = 0; l < spectrum.num_frames(); ++l) {
        const Complex c = spectrum(l, bins[i], n) * std::conj(spectrum(l, bins[i], m));
        const double mag = std::abs(c);
        if (mag > 0.0) {
          acc += c / mag;
          ++valid_terms;
        }
      }
      cross[p][i] = acc;
    }
  }
  if (valid_terms == 0) throw InvalidArgument("srp_phat: spectrum is zero, PHAT weighting undefined");

  const double c = geom.speed_of_sound();
  SrpPhatResult out;
  out.pseudo_spectrum.resize(static_cast<Eigen::Index>(grid.elevations_deg().size()),
                             static_cast<Eigen::Index>(grid.azimuths_deg().size()));
  const std::size_t n_az = grid.azimuths_deg().size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vec3 u = grid.candidates()[g].unit_vector();
    double score = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [n, m] = pairs[p];
      // exp(j k^T (p_n - p_m)) with k = -(2 pi f / c) u.
      const double proj = -u.dot(geom.position(n) - geom.position(m)) / c;
      for (std::size_t i = 0; i < bins.size(); ++i) {
        const double phase = 2.0 * std::numbers::pi * params.bin_frequency(bins[i]) * proj;
        score += (cross[p][i] * std::polar(1.0, phase)).real();
      }
    }
    out.pseudo_spectrum(static_cast<Eigen::Index>(g / n_az), static_cast<Eigen::Index>(g % n_az)) = score;
    if (score > best) {
      best = score;
      out.best_index = g;
    }
  }
  out.doa = grid.candidates()[out.best_index];
  return out;
}

}  // namespace cdrfe
