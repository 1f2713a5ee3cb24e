// Copyright 2026 The survint Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "survint/error.hpp"
#include "survint/rng.hpp"
#include "survint/simulation.hpp"
#include "survint/weights.hpp"

using namespace survint;

namespace {

Eigen::VectorXd random_weights(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.2, 40.0);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = u(gen);
  }
  return w;
}

// nps rows with intercept and two covariates, plus a ps with weights.
struct PropensityData {
  Eigen::MatrixXd Z1;
  Eigen::MatrixXd Z2;
  Eigen::VectorXd W2;
};

PropensityData propensity_data(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(5.0, 60.0);
  PropensityData d;
  d.Z1.resize(120, 3);
  d.Z2.resize(80, 3);
  d.W2.resize(80);
  for (int i = 0; i < 120; ++i) {
    d.Z1.row(i) << 1.0, nd(gen) + 0.5, nd(gen);
  }
  for (int i = 0; i < 80; ++i) {
    d.Z2.row(i) << 1.0, nd(gen), nd(gen);
    d.W2[i] = ud(gen);
  }
  return d;
}

TEST(Weights, EffectiveSampleSizeExamples) {
  EXPECT_DOUBLE_EQ(effective_sample_size(Eigen::VectorXd::Constant(7, 3.5)), 7.0);
  EXPECT_DOUBLE_EQ(effective_sample_size(Eigen::Vector4d(1, 1, 1, 3)), 3.0);
  EXPECT_THROW(effective_sample_size(Eigen::VectorXd()), DataError);
  EXPECT_THROW(effective_sample_size(Eigen::Vector2d(1.0, 0.0)), DataError);
}

TEST(Weights, EffectiveSampleSizeScaleInvariance) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Eigen::VectorXd W = random_weights(50, s);
    EXPECT_NEAR(effective_sample_size(W), effective_sample_size(5.0 * W), 1e-10);
    EXPECT_NEAR(effective_sample_size(W), effective_sample_size(1e-3 * W), 1e-10);
    EXPECT_GT(effective_sample_size(W), 1.0);
  }
}

TEST(Weights, AdjustedWeightsExamples) {
  const WeightSet a = adjust_weights(Eigen::Vector2d(1.0, 1.0));
  EXPECT_DOUBLE_EQ(a.n_o, 2.0);
  EXPECT_DOUBLE_EQ(a.w[0], 1.0);
  const WeightSet b = adjust_weights(Eigen::Vector2d(1.0, 3.0));
  EXPECT_DOUBLE_EQ(b.n_o, 1.6);
  EXPECT_NEAR(b.w[0], 0.4, 1e-15);
  EXPECT_NEAR(b.w[1], 1.2, 1e-15);
}

TEST(Weights, AdjustedWeightsSumIdentities) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Eigen::VectorXd W = random_weights(200, 100 + s);
    const WeightSet set = adjust_weights(W);
    EXPECT_NEAR(set.w.sum(), set.n_o, 1e-10 * set.n_o);
    EXPECT_NEAR(set.w.squaredNorm(), set.n_o, 1e-10 * set.n_o);
    EXPECT_LE(set.w.squaredNorm(), set.w.sum() * set.w.sum());
    for (int i = 1; i < 200; ++i) {
      EXPECT_NEAR(set.w[i] / set.w[0], W[i] / W[0], 1e-12 * W[i] / W[0]);
    }
  }
}

TEST(Weights, PseudoLoglikAtZero) {
  Eigen::MatrixXd Z1 = Eigen::MatrixXd::Ones(10, 1);
  Eigen::MatrixXd Z2 = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd W2(4);
  W2 << 2.0, 3.0, 5.0, 7.0;
  EXPECT_NEAR(clw_pseudo_loglik(Eigen::VectorXd::Zero(1), Z1, Z2, W2), -std::log(2.0) * 17.0, 1e-12);
}

TEST(Weights, PseudoLoglikIsStableForLargePredictors) {
  Eigen::MatrixXd Z1 = Eigen::MatrixXd::Ones(2, 1);
  Eigen::MatrixXd Z2 = Eigen::MatrixXd::Ones(2, 1);
  const Eigen::VectorXd W2 = Eigen::Vector2d(1.0, 1.0);
  for (double t : {-700.0, 700.0}) {
    const double v = clw_pseudo_loglik(Eigen::VectorXd::Constant(1, t), Z1, Z2, W2);
    EXPECT_TRUE(std::isfinite(v)) << t;
  }
  EXPECT_NEAR(clw_pseudo_loglik(Eigen::VectorXd::Constant(1, 700.0), Z1, Z2, W2), 2.0 * 700.0 - 2.0 * 700.0, 1e-9);
}

TEST(Weights, GradientMatchesFiniteDifferences) {
  const PropensityData d = propensity_data(7);
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd(0.0, 0.7);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd theta(3);
    theta << nd(gen) - 3.0, nd(gen), nd(gen);
    const Eigen::VectorXd g = clw_gradient(theta, d.Z1, d.Z2, d.W2);
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& t) { return clw_pseudo_loglik(t, d.Z1, d.Z2, d.W2); }, theta);
    EXPECT_LT(oracle::relative_error(g, fd), 1e-6) << "rep " << rep;
  }
}

TEST(Weights, ValueDecreasesAgainstGradient) {
  const PropensityData d = propensity_data(8);
  const Eigen::VectorXd theta = Eigen::Vector3d(-2.0, 0.3, -0.2);
  const Eigen::VectorXd g = clw_gradient(theta, d.Z1, d.Z2, d.W2);
  EXPECT_LT(clw_pseudo_loglik(theta - 1e-4 * g, d.Z1, d.Z2, d.W2), clw_pseudo_loglik(theta, d.Z1, d.Z2, d.W2));
}

TEST(Weights, HessianMatchesFiniteDifferences) {
  const PropensityData d = propensity_data(9);
  const Eigen::VectorXd theta = Eigen::Vector3d(-3.0, 0.4, 0.1);
  const Eigen::MatrixXd H = clw_hessian(theta, d.Z1, d.Z2, d.W2);
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& t) { return clw_gradient(t, d.Z1, d.Z2, d.W2)[j]; }, theta);
    EXPECT_LT(oracle::relative_error(H.row(j).transpose(), fd), 1e-6);
  }
}

TEST(Weights, InterceptOnlyRootIsAnalytic) {
  // sum_nps 1 = pi sum_ps W2 at the root.
  Eigen::MatrixXd Z1 = Eigen::MatrixXd::Ones(37, 1);
  Eigen::MatrixXd Z2 = Eigen::MatrixXd::Ones(5, 1);
  Eigen::VectorXd W2(5);
  W2 << 100.0, 250.0, 80.0, 400.0, 170.0;
  const PropensityFit fit = estimate_propensity(Z1, Z2, W2);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.pi[0], 37.0 / W2.sum(), 1e-8);
  EXPECT_LE(fit.final_gradient_norm, 1e-8);
}

TEST(Weights, TighterToleranceBarelyMoves) {
  const PropensityData d = propensity_data(10);
  PropensityOptions loose;
  loose.tol = 1e-6;
  PropensityOptions tight;
  tight.tol = 1e-10;
  const PropensityFit a = estimate_propensity(d.Z1, d.Z2, d.W2, loose);
  const PropensityFit b = estimate_propensity(d.Z1, d.Z2, d.W2, tight);
  EXPECT_LT((a.theta - b.theta).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LE(b.final_gradient_norm, 1e-8);
}

TEST(Weights, PropensityPermutationInvariant) {
  const PropensityData d = propensity_data(12);
  std::vector<Eigen::Index> p1(120);
  std::vector<Eigen::Index> p2(80);
  std::iota(p1.begin(), p1.end(), 0);
  std::iota(p2.begin(), p2.end(), 0);
  std::mt19937_64 gen(3);
  std::shuffle(p1.begin(), p1.end(), gen);
  std::shuffle(p2.begin(), p2.end(), gen);
  const PropensityFit a = estimate_propensity(d.Z1, d.Z2, d.W2);
  const PropensityFit b = estimate_propensity(d.Z1(p1, Eigen::all), d.Z2(p2, Eigen::all), d.W2(p2));
  EXPECT_LT((a.theta - b.theta).cwiseAbs().maxCoeff(), 1e-9);
  for (int i = 0; i < 120; ++i) {
    EXPECT_NEAR(a.pi[p1[static_cast<std::size_t>(i)]], b.pi[i], 1e-10);
  }
}

TEST(Weights, PropensityInvariantsHold) {
  const PropensityData d = propensity_data(13);
  const PropensityFit fit = estimate_propensity(d.Z1, d.Z2, d.W2);
  EXPECT_TRUE((fit.pi.array() > 0.0 && fit.pi.array() < 1.0).all());
  EXPECT_LT((fit.W1.cwiseProduct(fit.pi).array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Weights, PropensityRankDeficiency) {
  PropensityData d = propensity_data(14);
  d.Z1.col(2) = 2.0 * d.Z1.col(1);
  d.Z2.col(2) = 2.0 * d.Z2.col(1);
  EXPECT_THROW(estimate_propensity(d.Z1, d.Z2, d.W2), NumericalError);
}

TEST(Weights, PropensityRecoversTruthOverReplications) {
  // Poisson nps and systematic PPS ps from one population with known theta.
  const std::size_t N = 20000;
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd Z(N, 3);
  for (std::size_t i = 0; i < N; ++i) {
    Z.row(static_cast<Eigen::Index>(i)) << 1.0, nd(gen), nd(gen);
  }
  const Eigen::Vector3d theta_true(-3.0, 0.5, -0.3);
  Eigen::VectorXd pi1(N);
  Eigen::VectorXd size(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    pi1[r] = 1.0 / (1.0 + std::exp(-Z.row(r).dot(theta_true)));
    size[r] = std::exp(0.4 * Z(r, 1));
  }
  const Eigen::VectorXd pi2 = 400.0 * size / size.sum();
  const int R = 200;
  Eigen::MatrixXd est(R, 3);
  for (int r = 0; r < R; ++r) {
    RngStream s(77, substream(1, static_cast<std::uint64_t>(r)));
    const auto nps = poisson_sample(pi1, s);
    const auto ps = systematic_pps(pi2, 400, s);
    Eigen::VectorXd W2(static_cast<Eigen::Index>(ps.size()));
    for (std::size_t k = 0; k < ps.size(); ++k) {
      W2[static_cast<Eigen::Index>(k)] = 1.0 / pi2[ps[k]];
    }
    est.row(r) = estimate_propensity(Z(nps, Eigen::all), Z(ps, Eigen::all), W2).theta.transpose();
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = est.col(j).mean();
    const double sd = std::sqrt((est.col(j).array() - mean).square().sum() / (R - 1));
    EXPECT_NEAR(mean, theta_true[j], 3.0 * sd / std::sqrt(static_cast<double>(R))) << "coefficient " << j;
  }
}

TEST(Weights, QuantileMatchesSortOracle) {
  const Eigen::VectorXd v = random_weights(101, 5);
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.5), s[50]);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 1.0), s[100]);
  EXPECT_NEAR(quantile_linear(v, 0.99), s[99], 1e-12);
  EXPECT_NEAR(quantile_linear(v, 0.255), s[25] + 0.5 * (s[26] - s[25]), 1e-12);
}

TEST(Weights, WinsorizeNoOp) {
  const Eigen::VectorXd W = Eigen::Vector4d(1.5, 2.0, 3.0, 2.5);
  EXPECT_EQ(winsorize_weights(W, 1.0, 1.0), W);
}

TEST(Weights, WinsorizeLowerClampOnly) {
  const Eigen::VectorXd out = winsorize_weights(Eigen::Vector3d(0.5, 2.0, 3.0), 1.0, 1.0);
  EXPECT_EQ(out, Eigen::Vector3d(1.0, 2.0, 3.0));
}

TEST(Weights, WinsorizeCapsOutlierAtQuantile) {
  Eigen::VectorXd W = random_weights(1000, 6).array() + 1.0;
  W[17] = 1e6;
  std::vector<double> s(W.data(), W.data() + W.size());
  std::sort(s.begin(), s.end());
  const double h = 999.0 * 0.99;
  const auto lo = static_cast<std::size_t>(h);
  const double cap = s[lo] + (h - lo) * (s[lo + 1] - s[lo]);
  const Eigen::VectorXd out = winsorize_weights(W, 1.0, 0.99);
  EXPECT_DOUBLE_EQ(out.maxCoeff(), cap);
  EXPECT_DOUBLE_EQ(out[17], cap);
}

TEST(Weights, WinsorizeRejectsCrossedBounds) {
  EXPECT_THROW(winsorize_weights(Eigen::Vector3d(1.0, 1.0, 1.0), 1.0, 0.99), UsageError);
}

TEST(Weights, CalibrationIdentityWhenAlreadyCalibrated) {
  const PropensityData d = propensity_data(15);
  const Eigen::VectorXd w = random_weights(120, 7);
  const Eigen::VectorXd t = d.Z1.transpose() * w;
  const CalibrationResult r = calibrate_weights(w, d.Z1, t);
  EXPECT_LT(r.lambda.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r.w_tilde - w).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Weights, CalibrationInterceptOnlyByHand) {
  const CalibrationResult r =
      calibrate_weights(Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Constant(1, 4.0));
  EXPECT_NEAR(r.w_tilde[0], 2.0, 1e-14);
  EXPECT_NEAR(r.w_tilde[1], 2.0, 1e-14);
  EXPECT_NEAR(r.lambda[0], 2.0, 1e-14);
}

TEST(Weights, CalibrationEquationsHold) {
  std::mt19937_64 gen(16);
  std::uniform_real_distribution<double> u(0.9, 1.1);
  for (int rep = 0; rep < 20; ++rep) {
    const PropensityData d = propensity_data(100 + rep);
    const Eigen::VectorXd w = random_weights(120, 200 + rep);
    Eigen::VectorXd t = d.Z1.transpose() * w;
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      t[j] *= u(gen);
    }
    const CalibrationResult r = calibrate_weights(w, d.Z1, t, std::nullopt, {false, 0});
    EXPECT_LE(r.residual.cwiseAbs().maxCoeff(), 1e-8 * (1.0 + t.cwiseAbs().maxCoeff()));
    EXPECT_LE((d.Z1.transpose() * r.w_tilde - t).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + t.cwiseAbs().maxCoeff()));
  }
}

TEST(Weights, CalibrationClampRestoresTotal) {
  Eigen::MatrixXd Z(4, 2);
  Z << 1, 0, 1, 1, 1, 10, 1, -10;
  const Eigen::VectorXd w = Eigen::Vector4d(1.0, 1.0, 1.0, 1.0);
  const Eigen::VectorXd t = Eigen::Vector2d(8.0, 200.0);
  const CalibrationResult r = calibrate_weights(w, Z, t);
  ASSERT_GT(r.negative_count, 0);
  EXPECT_TRUE(r.clamped);
  EXPECT_TRUE((r.w_tilde.array() > 0.0).all());
  EXPECT_NEAR(r.w_tilde.sum(), 8.0, 1e-12);
}

TEST(Weights, CalibrationSingular) {
  Eigen::MatrixXd Z(3, 2);
  Z << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(calibrate_weights(Eigen::Vector3d(1, 1, 1), Z, Eigen::Vector2d(3, 6)), NumericalError);
}

TEST(Weights, NpsPipelineOrder) {
  const PropensityData d = propensity_data(17);
  NpsWeightOptions opt;
  const NpsWeights w = estimate_nps_weights(d.Z1, d.Z2, d.W2, opt);
  EXPECT_EQ(w.raw, w.fit.W1);
  EXPECT_EQ(w.winsorized, winsorize_weights(w.raw, 1.0, 0.99));
  EXPECT_NEAR(w.calibrated.sum(), d.W2.sum(), 1e-9 * d.W2.sum());
  opt.totals = Eigen::Vector3d(d.W2.sum(), 0.1 * d.W2.sum(), 0.0);
  const NpsWeights c = estimate_nps_weights(d.Z1, d.Z2, d.W2, opt);
  ASSERT_TRUE(c.calibration.has_value());
  if (!c.calibration->clamped) {
    EXPECT_LE(c.calibration->residual.cwiseAbs().maxCoeff(), 1e-8 * (1.0 + d.W2.sum()));
  }
}

}  // namespace
