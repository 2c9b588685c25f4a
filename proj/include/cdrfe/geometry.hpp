#pragma once

// Array geometry, free-field plane-wave propagation and the spatial coherence
// models of direct and spherically isotropic (diffuse) sound.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cdrfe/error.hpp"
#include "cdrfe/fft.hpp"

namespace cdrfe {

using Vec3 = Eigen::Vector3d;

inline constexpr double kDefaultSpeedOfSound = 343.0;

/// Which microphones take part in processing. Failed channels are inactive.
class ChannelMask {
 public:
  ChannelMask() = default;
  explicit ChannelMask(std::vector<bool> active) : active_(std::move(active)) {}

  static ChannelMask all(std::size_t n) { return ChannelMask(std::vector<bool>(n, true)); }

  std::size_t size() const { return active_.size(); }
  bool active(std::size_t n) const { return active_.at(n); }
  void set(std::size_t n, bool on) { active_.at(n) = on; }

  std::size_t count() const {
    std::size_t c = 0;
    for (bool a : active_) c += a ? 1 : 0;
    return c;
  }

  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t n = 0; n < active_.size(); ++n)
      if (active_[n]) idx.push_back(n);
    return idx;
  }

  /// All unordered pairs (n < m) of active channels.
  std::vector<std::pair<std::size_t, std::size_t>> active_pairs() const {
    const auto idx = active_indices();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j) pairs.emplace_back(idx[i], idx[j]);
    return pairs;
  }

  bool operator==(const ChannelMask&) const = default;

 private:
  std::vector<bool> active_;
};

/// Microphone positions in meters plus the speed of sound.
class ArrayGeometry {
 public:
  ArrayGeometry() = default;

  /// Validates N >= 2, finite coordinates, c > 0 and distinct positions.
  ArrayGeometry(std::vector<Vec3> positions, double speed_of_sound = kDefaultSpeedOfSound)
      : ArrayGeometry(std::move(positions), speed_of_sound, true) {}

  /// Same as the constructor but tolerates coincident microphones. Only the
  /// simulator and degenerate-case tests need this.
  static ArrayGeometry allow_coincident(std::vector<Vec3> positions,
                                        double speed_of_sound = kDefaultSpeedOfSound) {
    return ArrayGeometry(std::move(positions), speed_of_sound, false);
  }

  std::size_t size() const { return positions_.size(); }
  const Vec3& position(std::size_t n) const { return positions_.at(n); }
  const std::vector<Vec3>& positions() const { return positions_; }
  double speed_of_sound() const { return c_; }

  double distance(std::size_t n, std::size_t m) const {
    return (positions_.at(n) - positions_.at(m)).norm();
  }

 private:
  ArrayGeometry(std::vector<Vec3> positions, double c, bool require_distinct)
      : positions_(std::move(positions)), c_(c) {
    detail::require(positions_.size() >= 2, "geometry needs at least 2 microphones");
    detail::require(std::isfinite(c_) && c_ > 0.0, "speed of sound must be positive");
    for (const auto& p : positions_)
      detail::require(p.allFinite(), "microphone positions must be finite");
    if (!require_distinct) return;
    for (std::size_t n = 0; n < positions_.size(); ++n)
      for (std::size_t m = n + 1; m < positions_.size(); ++m)
        detail::require(distance(n, m) > 0.0, "microphones " + std::to_string(n) + " and " +
                                                  std::to_string(m) + " coincide");
  }

  std::vector<Vec3> positions_;
  double c_ = kDefaultSpeedOfSound;
};

/// Direction of arrival. Azimuth in [0, 2pi), elevation (polar angle from +z)
/// in [0, pi]; (pi/2, pi/2) is broadside to an array on the x axis.
class DoA {
 public:
  DoA() = default;
  DoA(double azimuth, double elevation) : elevation_(elevation) {
    detail::require(std::isfinite(azimuth) && std::isfinite(elevation), "DoA angles must be finite");
    detail::require(elevation >= 0.0 && elevation <= std::numbers::pi, "elevation must lie in [0, pi]");
    azimuth_ = std::fmod(azimuth, 2.0 * std::numbers::pi);
    if (azimuth_ < 0.0) azimuth_ += 2.0 * std::numbers::pi;
  }

  static DoA from_degrees(double azimuth_deg, double elevation_deg) {
    return DoA(azimuth_deg * std::numbers::pi / 180.0, elevation_deg * std::numbers::pi / 180.0);
  }

  double azimuth() const { return azimuth_; }
  double elevation() const { return elevation_; }
  double azimuth_deg() const { return azimuth_ * 180.0 / std::numbers::pi; }
  double elevation_deg() const { return elevation_ * 180.0 / std::numbers::pi; }

  /// Unit vector pointing from the array towards the source.
  Vec3 unit_vector() const {
    return {std::sin(elevation_) * std::cos(azimuth_), std::sin(elevation_) * std::sin(azimuth_),
            std::cos(elevation_)};
  }

  bool operator==(const DoA&) const = default;

 private:
  double azimuth_ = std::numbers::pi / 2;
  double elevation_ = std::numbers::pi / 2;
};

/// k_d = -(2 pi f / c) u(doa).
inline Vec3 wavevector(const DoA& doa, double freq, double c) {
  detail::require(freq >= 0.0, "frequency must be non-negative");
  detail::require(c > 0.0, "speed of sound must be positive");
  return -(2.0 * std::numbers::pi * freq / c) * doa.unit_vector();
}

/// h_n = exp(-j k_d^T p_n). Doubles as the look-direction vector d(f).
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const DoA& doa, double freq) {
  const Vec3 k = wavevector(doa, freq, geom.speed_of_sound());
  Eigen::VectorXcd h(static_cast<Eigen::Index>(geom.size()));
  for (std::size_t n = 0; n < geom.size(); ++n)
    h(static_cast<Eigen::Index>(n)) = std::polar(1.0, -k.dot(geom.position(n)));
  return h;
}

/// Unnormalized sinc, sin(x)/x.
inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

/// Coherence of a spherically isotropic field between omnidirectional mics
/// spaced `distance` apart.
inline double diffuse_coherence(double distance, double freq, double c) {
  detail::require(distance >= 0.0, "distance must be non-negative");
  return sinc(2.0 * std::numbers::pi * freq * distance / c);
}

/// Coherence of a single plane wave with inter-microphone delay `tdoa` seconds.
inline Complex direct_coherence(double tdoa, double freq) {
  return std::polar(1.0, 2.0 * std::numbers::pi * freq * tdoa);
}

/// J_diff(f) restricted to the active channels (rows/cols in active order).
inline Eigen::MatrixXd diffuse_coherence_matrix(const ArrayGeometry& geom, double freq,
                                                const ChannelMask& mask) {
  detail::require_dims(mask.size() == geom.size(), "mask size differs from microphone count");
  const auto idx = mask.active_indices();
  detail::require(idx.size() >= 2, "diffuse coherence matrix needs >= 2 active channels");
  const auto na = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(na, na);
  for (Eigen::Index a = 0; a < na; ++a)
    for (Eigen::Index b = a + 1; b < na; ++b) {
      const double v = diffuse_coherence(geom.distance(idx[a], idx[b]), freq, geom.speed_of_sound());
      j(a, b) = v;
      j(b, a) = v;
    }
  return j;
}

}  // namespace cdrfe
