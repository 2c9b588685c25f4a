#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "cdrfe/geometry.hpp"
#include "support/scenes.hpp"

using namespace cdrfe;
using std::numbers::pi;

TEST(Geometry, ArrayValidation) {
  EXPECT_THROW(ArrayGeometry({{0, 0, 0}}), InvalidArgument);
  EXPECT_THROW(ArrayGeometry({{0, 0, 0}, {0, 0, 0}}), InvalidArgument);
  EXPECT_THROW(ArrayGeometry({{0, 0, 0}, {NAN, 0, 0}}), InvalidArgument);
  EXPECT_THROW(ArrayGeometry({{0, 0, 0}, {1, 0, 0}}, 0.0), InvalidArgument);
  EXPECT_NO_THROW(ArrayGeometry::allow_coincident({{0, 0, 0}, {0, 0, 0}}));
  const auto g = fixtures::tablet_array();
  EXPECT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.speed_of_sound(), 343.0);
  EXPECT_NEAR(g.distance(0, 1), 0.2, 1e-15);
}

TEST(Geometry, DoAConventions) {
  const DoA broadside = DoA::from_degrees(90, 90);
  EXPECT_NEAR((broadside.unit_vector() - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(DoA::from_degrees(-90, 90).azimuth_deg(), 270.0, 1e-12);
  EXPECT_NEAR(DoA::from_degrees(360, 90).azimuth(), 0.0, 1e-12);
  EXPECT_THROW(DoA(0.0, -0.1), InvalidArgument);
  EXPECT_THROW(DoA(0.0, pi + 0.1), InvalidArgument);
}

TEST(Geometry, Wavevector) {
  EXPECT_EQ(wavevector(DoA::from_degrees(30, 40), 0.0, 343.0), Vec3::Zero());
  const Vec3 k = wavevector(DoA(1.234, 0.0), 343.0, 343.0);
  EXPECT_NEAR((k - Vec3(0, 0, -2.0 * pi)).norm(), 0.0, 1e-12);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> az(0.0, 2 * pi), el(0.0, pi), fr(0.0, 8000.0);
  for (int i = 0; i < 200; ++i) {
    const DoA d(az(rng), el(rng));
    const double f = fr(rng);
    EXPECT_NEAR(wavevector(d, f, 343.0).norm(), 2 * pi * f / 343.0, 1e-9);
    // Linear in frequency.
    EXPECT_NEAR((wavevector(d, 2 * f, 343.0) - 2.0 * wavevector(d, f, 343.0)).norm(), 0.0, 1e-9);
  }
  EXPECT_THROW(wavevector(DoA{}, -1.0, 343.0), InvalidArgument);
}

TEST(Geometry, SteeringVector) {
  const auto g = fixtures::tablet_array();
  const auto h0 = steering_vector(g, DoA::from_degrees(10, 70), 0.0);
  for (Eigen::Index n = 0; n < h0.size(); ++n) EXPECT_EQ(h0(n), Complex(1.0, 0.0));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> az(0.0, 2 * pi), el(0.0, pi), fr(0.0, 8000.0);
  for (int i = 0; i < 100; ++i) {
    const auto h = steering_vector(g, DoA(az(rng), el(rng)), fr(rng));
    for (Eigen::Index n = 0; n < h.size(); ++n) EXPECT_NEAR(std::abs(h(n)), 1.0, 1e-14);
  }

  // Endfire pair 0.1 m apart at 857.5 Hz: phase difference 2 pi f d / c = pi/2.
  const ArrayGeometry pair({{0, 0, 0}, {0.1, 0, 0}});
  const auto h = steering_vector(pair, DoA::from_degrees(0, 90), 857.5);
  EXPECT_NEAR(std::arg(h(1) / h(0)), pi / 2, 1e-12);
}

TEST(Geometry, DiffuseCoherence) {
  EXPECT_DOUBLE_EQ(diffuse_coherence(0.05, 0.0, 343.0), 1.0);
  EXPECT_DOUBLE_EQ(diffuse_coherence(0.0, 5000.0, 343.0), 1.0);
  EXPECT_NEAR(diffuse_coherence(0.05, 3430.0, 343.0), 0.0, 1e-15);
  EXPECT_GT(diffuse_coherence(0.05, 3429.0, 343.0), 0.0);
  EXPECT_LT(diffuse_coherence(0.05, 3431.0, 343.0), 0.0);
  for (double f = 0.0; f < 8000.0; f += 7.3) EXPECT_LE(std::abs(diffuse_coherence(0.1, f, 343.0)), 1.0);
  EXPECT_THROW(diffuse_coherence(-0.1, 10.0, 343.0), InvalidArgument);
}

TEST(Geometry, DirectCoherence) {
  EXPECT_EQ(direct_coherence(0.0, 1234.0), Complex(1.0, 0.0));
  const Complex g = direct_coherence(0.25e-3, 1000.0);
  EXPECT_NEAR(g.real(), 0.0, 1e-15);
  EXPECT_NEAR(g.imag(), 1.0, 1e-15);
  for (double dt : {-1e-3, 3e-4, 7e-5}) EXPECT_NEAR(std::abs(direct_coherence(dt, 777.0)), 1.0, 1e-15);
}

TEST(Geometry, DiffuseCoherenceMatrix) {
  const auto g = fixtures::tablet_array();
  const auto mask = ChannelMask::all(5);
  EXPECT_TRUE(diffuse_coherence_matrix(g, 0.0, mask).isApprox(Eigen::MatrixXd::Ones(5, 5)));
  for (double f = 0.0; f <= 8000.0; f += 15.625) {
    const auto j = diffuse_coherence_matrix(g, f, mask);
    EXPECT_EQ(j, j.transpose());
    for (Eigen::Index n = 0; n < 5; ++n) EXPECT_EQ(j(n, n), 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff()) << "f=" << f;
  }
  ChannelMask three({true, false, true, true, false});
  const auto j3 = diffuse_coherence_matrix(g, 1000.0, three);
  EXPECT_EQ(j3.rows(), 3);
  EXPECT_DOUBLE_EQ(j3(0, 1), diffuse_coherence(g.distance(0, 2), 1000.0, 343.0));
  EXPECT_THROW(diffuse_coherence_matrix(g, 100.0, ChannelMask({true, false, false, false, false})), InvalidArgument);
}

TEST(Geometry, ChannelMaskPairs) {
  ChannelMask m({true, true, false, true, true});
  EXPECT_EQ(m.count(), 4u);
  EXPECT_EQ(m.active_pairs().size(), 6u);
  EXPECT_EQ(ChannelMask::all(5).active_pairs().size(), 10u);
}
