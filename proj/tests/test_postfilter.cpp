#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cdrfe/postfilter.hpp"
#include "support/scenes.hpp"

using namespace cdrfe;

TEST(WienerGain, ReferenceValues) {
  const PostfilterParams p;
  EXPECT_DOUBLE_EQ(wiener_gain(0.0, p), 0.1);
  EXPECT_NEAR(wiener_gain(12.0, p), 0.9, 1e-15);
  EXPECT_NEAR(wiener_gain(1e4, p), 1.0 - 1.3 / 10001.0, 1e-15);
  EXPECT_NEAR(p.floor_threshold(), 0.4444444444444444, 1e-12);
  EXPECT_DOUBLE_EQ(wiener_gain(p.floor_threshold() - 1e-6, p), 0.1);
  EXPECT_GT(wiener_gain(p.floor_threshold() + 1e-6, p), 0.1);
  EXPECT_THROW(wiener_gain(-1.0, p), InvalidArgument);
}

TEST(WienerGain, MonotoneAndBounded) {
  const PostfilterParams p;
  double prev = 0.0;
  for (double snr = 0.0; snr < 1e3; snr = snr * 1.05 + 1e-3) {
    const double g = wiener_gain(snr, p);
    ASSERT_GE(g, prev);
    ASSERT_GE(g, 0.1);
    ASSERT_LE(g, 1.0);
    prev = g;
  }
}

TEST(WienerGain, ZeroOverestimationIsUnity) {
  const PostfilterParams p{0.0, 0.1};
  for (double snr : {0.0, 0.5, 100.0}) EXPECT_EQ(wiener_gain(snr, p), 1.0);
}

TEST(PostfilterParams, Validation) {
  EXPECT_THROW((PostfilterParams{-0.1, 0.1}).validate(), InvalidArgument);
  EXPECT_THROW((PostfilterParams{1.3, 0.0}).validate(), InvalidArgument);
  EXPECT_THROW((PostfilterParams{1.3, 1.0}).validate(), InvalidArgument);
  EXPECT_THROW((PostfilterParams{1.3, 0.1, 1.0}).validate(), InvalidArgument);
  EXPECT_NO_THROW((PostfilterParams{0.0, 0.1, 0.5}).validate());
}

TEST(ApplyGain, PreservesPhaseAndNeverAmplifies) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXcd y = fixtures::random_complex(rng, 40, 33);
  Eigen::MatrixXd snr(40, 33);
  std::exponential_distribution<double> e(0.5);
  for (Eigen::Index i = 0; i < snr.size(); ++i) snr.data()[i] = e(rng);
  const auto g = compute_gains(snr, PostfilterParams{});
  const auto out = apply_gain(y, g);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    ASSERT_LE(std::abs(out.data()[i]), std::abs(y.data()[i]));
    ASSERT_NEAR(std::abs(out.data()[i]) / std::abs(y.data()[i]), g.g.data()[i], 1e-14);
    ASSERT_NEAR(std::arg(out.data()[i] / y.data()[i]), 0.0, 1e-12);
  }
  EXPECT_THROW(apply_gain(y.topRows(3), g), DimensionError);
}

TEST(ComputeGains, RecursiveSmoothing) {
  Eigen::MatrixXd snr = Eigen::MatrixXd::Zero(3, 1);
  snr(1, 0) = 12.0;  // gain 0.9
  PostfilterParams p;
  p.gain_smoothing = 0.5;
  const auto g = compute_gains(snr, p).g;
  EXPECT_DOUBLE_EQ(g(0, 0), 0.1);
  EXPECT_NEAR(g(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(g(2, 0), 0.3, 1e-15);
  for (Eigen::Index i = 0; i < g.size(); ++i) EXPECT_GE(g.data()[i], p.g_min);
}
