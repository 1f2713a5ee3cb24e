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

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "survint/error.hpp"
#include "survint/pipeline.hpp"
#include "survint/simulation.hpp"

using namespace survint;

namespace {

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

class PopulationTest : public ::testing::TestWithParam<double> {};

TEST_P(PopulationTest, HitsTargetCorrelation) {
  PopulationSpec spec;
  spec.rho = GetParam();
  spec.seed = 3;
  const FinitePopulation pop = generate_population(spec);
  EXPECT_NEAR(pop.correlation, spec.rho, 0.005);
  EXPECT_NEAR(population_correlation(pop.m, pop.y), pop.correlation, 1e-12);
  EXPECT_NEAR(pop.X.col(1).mean(), 55.0, 4.0 * 70.0 / std::sqrt(12.0 * 20000.0));
  EXPECT_NEAR(pop.pi1.sum(), 1500.0, 1e-6);
  EXPECT_NEAR(pop.pi2.sum(), 300.0, 1e-9);
  EXPECT_GT(pop.pi2.minCoeff(), 0.0);
  EXPECT_LT(pop.pi2.maxCoeff(), 1.0);
  EXPECT_NEAR(pop.true_mean, pop.y.mean(), 1e-12);
  const double zmin = pop.pi2.minCoeff();
  EXPECT_NEAR(pop.pi2.maxCoeff() / zmin, 50.0, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Rho, PopulationTest, ::testing::Values(0.2, 0.3, 0.5, 0.8));

TEST(Population, Deterministic) {
  PopulationSpec spec;
  spec.N = 2000;
  spec.n1 = 150;
  spec.n2 = 30;
  const FinitePopulation a = generate_population(spec);
  const FinitePopulation b = generate_population(spec);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.X, b.X);
}

TEST(Population, RejectsBadSpecs) {
  PopulationSpec spec;
  spec.rho = 0.0;
  EXPECT_THROW(generate_population(spec), UsageError);
  spec.rho = 0.5;
  spec.n1 = 30000;
  EXPECT_THROW(generate_population(spec), UsageError);
}

TEST(Calibration, Theta0ZeroForSymmetricOffset) {
  EXPECT_NEAR(calibrate_theta0(Eigen::VectorXd::Zero(100), 50.0), 0.0, 1e-6);
}

TEST(Calibration, Theta0MatchesExpectedSize) {
  Eigen::VectorXd offset = Eigen::VectorXd::LinSpaced(500, -3.0, 4.0);
  for (double n1 : {5.0, 60.0, 240.0, 470.0}) {
    const double t = calibrate_theta0(offset, n1);
    double s = 0.0;
    for (double o : offset) {
      s += logistic(t + o);
    }
    EXPECT_NEAR(s, n1, 1e-6);
  }
  EXPECT_LT(calibrate_theta0(offset, 60.0), calibrate_theta0(offset, 240.0));
}

TEST(Calibration, Theta1GivesExactRatio) {
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(50, 0.3, 9.0);
  const double t = calibrate_theta1(b, 50.0);
  EXPECT_NEAR((t + b.maxCoeff()) / (t + b.minCoeff()), 50.0, 1e-10);
  EXPECT_THROW(calibrate_theta1(b, 1.0), UsageError);
}

TEST(Sampling, PoissonZeroProbabilitiesGiveEmptySample) {
  RngStream stream(1, 2);
  EXPECT_TRUE(poisson_sample(Eigen::VectorXd::Zero(100), stream).empty());
}

TEST(Sampling, PoissonSizeMean) {
  const Eigen::VectorXd pi = Eigen::VectorXd::LinSpaced(400, 0.01, 0.5);
  const double expected = pi.sum();
  const double variance = (pi.array() * (1.0 - pi.array())).sum();
  const int R = 2000;
  double total = 0.0;
  for (int r = 0; r < R; ++r) {
    RngStream stream(4, 5, static_cast<std::uint64_t>(r) << 20);
    total += static_cast<double>(poisson_sample(pi, stream).size());
  }
  EXPECT_NEAR(total / R, expected, 4.0 * std::sqrt(variance / R));
}

TEST(Sampling, SystematicSizeIsFixed) {
  Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(300, 1.0, 40.0);
  const Eigen::VectorXd pi = 25.0 * z / z.sum();
  for (bool randomized : {true, false}) {
    for (std::uint64_t r = 0; r < 50; ++r) {
      RngStream stream(6, r);
      const auto rows = systematic_pps(pi, 25, stream, randomized);
      EXPECT_EQ(rows.size(), 25u);
      EXPECT_EQ(std::set<Eigen::Index>(rows.begin(), rows.end()).size(), 25u);
    }
  }
}

TEST(Sampling, SystematicRejectsBadProbabilities) {
  RngStream stream(7, 8);
  EXPECT_THROW(systematic_pps(Eigen::VectorXd::Constant(10, 0.5), 3, stream), UsageError);
}

TEST(Misspecification, Parse) {
  EXPECT_EQ(parse_misspecification("none"), Misspecification::none);
  EXPECT_EQ(parse_misspecification(to_string(Misspecification::drop_x3_both)), Misspecification::drop_x3_both);
  EXPECT_THROW(parse_misspecification("x4"), UsageError);
}

StudySpec tiny_study(int threads) {
  StudySpec s;
  s.population.N = 3000;
  s.population.n1 = 300;
  s.population.n2 = 80;
  s.rho_list = {0.5};
  s.replications = 6;
  s.draws = 200;
  s.grid_size = 50;
  s.threads = threads;
  s.seed = 9;
  return s;
}

TEST(Study, ThreadCountDoesNotChangeResults) {
  std::ostringstream a;
  std::ostringstream b;
  write_metrics_csv(a, run_study(tiny_study(1)), tiny_study(1).scenarios);
  write_metrics_csv(b, run_study(tiny_study(3)), tiny_study(3).scenarios);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Study, RecordsAreComplete) {
  const StudyResult r = run_study(tiny_study(1));
  EXPECT_EQ(r.records.size(), 6u * 5u);
  EXPECT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) {
    EXPECT_GE(row.cov, 0.0);
    EXPECT_LE(row.cov, 1.0);
    EXPECT_GT(row.wid, 0.0);
    EXPECT_GE(row.prmse, 0.0);
  }
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.covered, rec.hpd.contains(rec.truth));
  }
}

// One replication of the default design: nps by Poisson sampling, ps by randomized systematic PPS.
PreparedSamples design_replication(double rho, std::uint64_t population_seed, std::uint64_t r) {
  PopulationSpec spec;
  spec.rho = rho;
  spec.seed = population_seed;
  static std::map<std::pair<double, std::uint64_t>, FinitePopulation> cache;
  auto it = cache.find({rho, population_seed});
  if (it == cache.end()) {
    it = cache.emplace(std::make_pair(rho, population_seed), generate_population(spec)).first;
  }
  const FinitePopulation& pop = it->second;
  RngStream stream(population_seed, substream(stream_tag("design-replication"), r));
  const auto rows1 = poisson_sample(pop.pi1, stream);
  const auto rows2 = systematic_pps(pop.pi2, spec.n2, stream, true);
  const std::vector<Eigen::Index> cols{0, 1, 2, 3};
  TwoSampleData d;
  d.Z1 = pop.X(rows1, Eigen::all);
  d.X1 = d.Z1;
  d.y1 = pop.y(rows1);
  d.Z2 = pop.X(rows2, Eigen::all);
  d.X2 = d.Z2;
  d.y2 = pop.y(rows2);
  d.W2 = pop.pi2(rows2).cwiseInverse();
  d.names = {"(Intercept)", "x1", "x2", "x3"};
  return prepare_samples(d, {}, true);
}

double design_truth(double rho, std::uint64_t population_seed) {
  PopulationSpec spec;
  spec.rho = rho;
  spec.seed = population_seed;
  return generate_population(spec).true_mean;
}

TEST(DesignExamples, InformativeWeightsSeparateEAndG) {
  const PreparedSamples prep = design_replication(0.2, 5, 0);
  ScenarioSpec spec;
  spec.draws = 10000;
  spec.kind = Scenario::E;
  const auto e = fit_and_predict(prep, spec, 6).mean.summary;
  spec.kind = Scenario::G;
  const auto g = fit_and_predict(prep, spec, 6).mean.summary;
  EXPECT_GT(std::abs(e.pm - g.pm), 2.0 * std::max(e.psd, g.psd)) << "E " << e.pm << " G " << g.pm;
}

TEST(DesignExamples, PsDiscountStaysNearOneWhenNpsIsFiveTimesLarger) {
  const PreparedSamples prep = design_replication(0.5, 7, 0);
  ScenarioSpec spec;
  spec.kind = Scenario::D;
  spec.draws = 10000;
  const PosteriorDraws post = fit_scenario(prep.nps, prep.ps, spec);
  const Interval hpd = summarize(post.a).hpd;
  EXPECT_GT(hpd.lower, 0.95);
  EXPECT_LE(hpd.upper, 1.0);
}

TEST(DesignExamples, ScenarioCMeanWithinThreePsdInMostReplications) {
  const double truth = design_truth(0.5, 8);
  int hits = 0;
  const int R = 200;
  for (int r = 0; r < R; ++r) {
    ScenarioSpec spec;
    spec.kind = Scenario::C;
    spec.draws = 2000;
    spec.seed = static_cast<std::uint64_t>(r);
    const auto s = fit_and_predict(design_replication(0.5, 8, static_cast<std::uint64_t>(r)), spec, r).mean.summary;
    hits += std::abs(s.pm - truth) <= 3.0 * s.psd ? 1 : 0;
  }
  EXPECT_GE(hits, static_cast<int>(0.94 * R)) << hits << " of " << R;
}

}  // namespace
