#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cdrfe/beamformer.hpp"
#include "support/scenes.hpp"

using namespace cdrfe;

namespace {

NoiseCovariance single_bin(const Eigen::MatrixXcd& s, ChannelMask mask) {
  NoiseCovariance cov;
  cov.s_nn = {s};
  cov.mask = std::move(mask);
  cov.context_frames = 1;
  return cov;
}

double output_power(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& s) { return (w.adjoint() * s * w)(0, 0).real(); }

}  // namespace

TEST(Mvdr, IdentityCovarianceGivesDelayAndSum) {
  const auto g = fixtures::tablet_array();
  const auto d = steering_vector(g, DoA::from_degrees(40, 90), 1500.0);
  const std::vector<Eigen::VectorXcd> steering{d};
  const auto w = mvdr_weights(single_bin(Eigen::MatrixXcd::Identity(5, 5), ChannelMask::all(5)), steering, 0.0);
  EXPECT_LT((w.w[0] - d / 5.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Mvdr, HandInvertedTwoByTwo) {
  // S = diag(1, 4), d = [1, 1]: w = S^{-1} d / (d^H S^{-1} d) = [1, 1/4] / (5/4) = [4/5, 1/5].
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = 4.0;
  const std::vector<Eigen::VectorXcd> steering{Eigen::VectorXcd::Ones(2)};
  const auto w = mvdr_weights(single_bin(s, ChannelMask::all(2)), steering, 0.0);
  EXPECT_NEAR(std::abs(w.w[0](0) - 0.8), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.w[0](1) - 0.2), 0.0, 1e-15);
}

TEST(Mvdr, DistortionlessForRandomCovariances) {
  std::mt19937_64 rng(1);
  const ArrayGeometry g({{0, 0, 0}, {0.05, 0, 0}, {0.1, 0.02, 0}, {0.0, 0.08, 0}, {-0.07, 0.03, 0.01}, {0.02, -0.06, 0}});
  for (int trial = 0; trial < 50; ++trial) {
    NoiseCovariance cov;
    cov.mask = ChannelMask::all(6);
    std::vector<Eigen::VectorXcd> steering;
    for (int f = 0; f < 8; ++f) {
      cov.s_nn.push_back(fixtures::random_hpd(rng, 6));
      steering.push_back(steering_vector(g, DoA(double(rng() % 628) / 100.0, 1.2), 400.0 * f));
    }
    for (double loading : {0.0, 1e-3, 0.5}) {
      const auto w = mvdr_weights(cov, steering, loading);
      for (int f = 0; f < 8; ++f) ASSERT_LT(std::abs(w.w[f].dot(steering[f]) - 1.0), 1e-8);
    }
  }
}

TEST(Mvdr, MinimizesNoisePowerAmongConstrainedWeights) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXcd s = fixtures::random_hpd(rng, 3);
    Eigen::VectorXcd d(3);
    for (int n = 0; n < 3; ++n) d(n) = std::polar(1.0, double(rng() % 1000) / 100.0);
    const std::vector<Eigen::VectorXcd> steering{d};
    const auto w = mvdr_weights(single_bin(s, ChannelMask::all(3)), steering, 0.0);
    const double p_mvdr = output_power(w.w[0], s);
    for (int k = 0; k < 1000; ++k) {
      Eigen::VectorXcd u = fixtures::random_complex(rng, 3, 1);
      u /= std::conj(u.dot(d));  // u^H d = 1
      ASSERT_LE(p_mvdr, output_power(u, s) * (1.0 + 1e-12));
    }
  }
}

TEST(Mvdr, MaskedChannelsGetZeroWeight) {
  std::mt19937_64 rng(3);
  const auto g = fixtures::tablet_array();
  const ChannelMask mask({true, true, false, true, true});
  const auto d = steering_vector(g, DoA::from_degrees(120, 90), 2000.0);
  const std::vector<Eigen::VectorXcd> steering{d};
  const auto w = mvdr_weights(single_bin(fixtures::random_hpd(rng, 4), mask), steering, 1e-3);
  EXPECT_EQ(w.w[0](2), Complex{});
  EXPECT_LT(std::abs(w.w[0].dot(d) - 1.0), 1e-12);
}

TEST(Mvdr, SingularCovarianceNeedsLoading) {
  const Eigen::VectorXcd v = Eigen::VectorXcd::Ones(3);
  const Eigen::MatrixXcd rank_one = v * v.adjoint();
  Eigen::VectorXcd d(3);
  d << 1.0, Complex(0, 1), -1.0;
  const std::vector<Eigen::VectorXcd> steering{d};
  EXPECT_THROW(mvdr_weights(single_bin(rank_one, ChannelMask::all(3)), steering, 0.0), NumericalError);
  const auto w = mvdr_weights(single_bin(rank_one, ChannelMask::all(3)), steering, 1e-3);
  EXPECT_LT(std::abs(w.w[0].dot(d) - 1.0), 1e-8);
  EXPECT_THROW(mvdr_weights(single_bin(Eigen::MatrixXcd::Zero(3, 3), ChannelMask::all(3)), steering, 1e-3),
               NumericalError);
}

TEST(Mvdr, PreconditionErrors) {
  const std::vector<Eigen::VectorXcd> steering{Eigen::VectorXcd::Ones(3)};
  EXPECT_THROW(mvdr_weights(single_bin(Eigen::MatrixXcd::Identity(1, 1), ChannelMask({true, false, false})), steering, 0.0),
               InvalidArgument);
  EXPECT_THROW(mvdr_weights(single_bin(Eigen::MatrixXcd::Identity(3, 3), ChannelMask::all(3)), steering, -1.0),
               InvalidArgument);
  const std::vector<Eigen::VectorXcd> two{Eigen::VectorXcd::Ones(3), Eigen::VectorXcd::Ones(3)};
  EXPECT_THROW(mvdr_weights(single_bin(Eigen::MatrixXcd::Identity(3, 3), ChannelMask::all(3)), two, 0.0), DimensionError);
}

TEST(BeamformerApply, PlaneWaveFromLookDirectionPassesUnchanged) {
  std::mt19937_64 rng(4);
  const auto g = fixtures::tablet_array();
  const FrameParams p{64, 16000.0};
  const DoA look = DoA::from_degrees(75, 80);
  const auto steering = steering_vectors(g, look, p);
  NoiseCovariance cov;
  cov.mask = ChannelMask::all(5);
  for (std::size_t f = 0; f < p.num_bins(); ++f) cov.s_nn.push_back(fixtures::random_hpd(rng, 5));
  const auto w = mvdr_weights(cov, steering, 1e-3, look);

  MultichannelSpectrum x(6, 5, p);
  Eigen::MatrixXcd s(6, p.num_bins());
  for (std::size_t l = 0; l < 6; ++l)
    for (std::size_t f = 0; f < p.num_bins(); ++f) {
      s(Eigen::Index(l), Eigen::Index(f)) = fixtures::random_complex(rng, 1, 1)(0, 0);
      x.snapshot(l, f) = steering[f] * s(Eigen::Index(l), Eigen::Index(f));
    }
  const auto y = apply(w, x);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    EXPECT_LT(std::abs(y.data()[i] - s.data()[i]), 1e-6 * std::abs(s.data()[i]));
}

TEST(BeamformerApply, ZeroInputAndDelayAndSumOnEqualChannels) {
  const FrameParams p{16, 16000.0};
  BeamformerWeights w;
  w.mask = ChannelMask::all(2);
  w.w.assign(p.num_bins(), Eigen::VectorXcd::Constant(2, 0.5));
  MultichannelSpectrum zero(3, 2, p);
  EXPECT_EQ(apply(w, zero).cwiseAbs().maxCoeff(), 0.0);

  std::mt19937_64 rng(5);
  MultichannelSpectrum x(3, 2, p);
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t f = 0; f < p.num_bins(); ++f) {
      const Complex v = fixtures::random_complex(rng, 1, 1)(0, 0);
      x(l, f, 0) = x(l, f, 1) = v;
    }
  const auto y = apply(w, x);
  const auto ref = x.channel(0);
  EXPECT_LT((y - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BeamformerApply, MaskedChannelContentIsIgnored) {
  std::mt19937_64 rng(6);
  const FrameParams p{16, 16000.0};
  const ChannelMask mask({true, false, true});
  BeamformerWeights w;
  w.mask = mask;
  for (std::size_t f = 0; f < p.num_bins(); ++f) {
    Eigen::VectorXcd v = fixtures::random_complex(rng, 3, 1);
    v(1) = 0.0;
    w.w.push_back(v);
  }
  MultichannelSpectrum x(4, 3, p), x_zeroed(4, 3, p);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t f = 0; f < p.num_bins(); ++f) {
      x.snapshot(l, f) = fixtures::random_complex(rng, 3, 1);
      x_zeroed.snapshot(l, f) = x.snapshot(l, f);
      x_zeroed(l, f, 1) = 0.0;
    }
  x(0, 0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(apply(w, x), apply(w, x_zeroed));
}

TEST(BeamformerApply, DimensionMismatch) {
  BeamformerWeights w;
  w.mask = ChannelMask::all(3);
  w.w.assign(9, Eigen::VectorXcd::Ones(3));
  EXPECT_THROW(apply(w, MultichannelSpectrum(2, 2, FrameParams{16, 16000.0})), DimensionError);
  EXPECT_THROW(apply(w, MultichannelSpectrum(2, 3, FrameParams{32, 16000.0})), DimensionError);
}
