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

#ifndef SURVINT_SIMULATION_HPP
#define SURVINT_SIMULATION_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "survint/posterior.hpp"
#include "survint/prediction.hpp"
#include "survint/rng.hpp"
#include "survint/weights.hpp"

namespace survint {

struct PopulationSpec {
  std::size_t N = 20000;
  std::size_t n1 = 1500;
  std::size_t n2 = 300;
  double rho = 0.5;
  /// Intercept and slopes of the population regression on (x1, x2, x3).
  std::array<double, 4> beta{23.8449, 0.0559, 2.2656, 0.2525};
  /// Participation slopes on (x1, x2, x3); the intercept is calibrated.
  std::array<double, 3> participation{0.1, 0.2, 0.1};
  /// Size-measure slopes on (x1, x2, x3); the intercept is calibrated.
  std::array<double, 3> size{1.0, 0.2, 0.1};
  /// Target max(z) / min(z) of the size measure.
  double size_ratio = 50.0;
  /// Generate y without the x3 term.
  bool omit_x3_in_response = false;
  std::uint64_t seed = 1;
};

struct FinitePopulation {
  /// Columns: intercept, x1, x2, x3.
  Eigen::MatrixXd X;
  /// Regression mean of each unit.
  Eigen::VectorXd m;
  Eigen::VectorXd y;
  double true_mean = 0.0;
  Eigen::VectorXd pi1;
  Eigen::VectorXd pi2;
  double theta0 = 0.0;
  double theta1 = 0.0;
  double sigma2 = 0.0;
  /// Realized Cor(m, y).
  double correlation = 1.0;
};

/// Throws NumericalError when the realized correlation misses rho by more than 0.005.
FinitePopulation generate_population(const PopulationSpec& spec);

/// Pearson correlation over the population.
double population_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// theta0 with sum_i logistic(theta0 + offset_i) = n1 to 1e-6, by bisection on [-100, 100].
double calibrate_theta0(const Eigen::VectorXd& offset, double n1);

/// theta1 = (max b - ratio min b) / (ratio - 1), so that max(z) / min(z) = ratio for z = theta1 + b.
double calibrate_theta1(const Eigen::VectorXd& b, double ratio = 50.0);

/// Independent Bernoulli(pi_i) inclusion. Indices are ascending.
std::vector<Eigen::Index> poisson_sample(const Eigen::VectorXd& pi, RngStream& stream);

/// Systematic selection of exactly n units on the cumulated pi (sum pi = n),
/// after a random permutation of the units when `randomized`. Indices are ascending.
std::vector<Eigen::Index> systematic_pps(const Eigen::VectorXd& pi, std::size_t n, RngStream& stream,
                                         bool randomized = true);

enum class Misspecification {
  none,
  /// y is generated with x3, the population model omits it.
  drop_x3_popmodel,
  /// y is generated without x3 and the population model omits it.
  drop_x3_both,
};

Misspecification parse_misspecification(const std::string& text);
const char* to_string(Misspecification m);

struct StudySpec {
  PopulationSpec population;
  std::vector<double> rho_list{0.2, 0.3, 0.5, 0.8};
  std::size_t replications = 200;
  std::vector<Scenario> scenarios{Scenario::B, Scenario::C, Scenario::D, Scenario::E, Scenario::G};
  std::size_t draws = 10000;
  std::size_t grid_size = 1000;
  Misspecification misspec = Misspecification::none;
  /// Winsorize and rescale the estimated nps weights.
  bool postprocess_weights = true;
  bool randomized_systematic = true;
  /// Predict with the population's own N and covariate means instead of the ps estimates.
  bool known_population_facts = false;
  std::uint64_t seed = 1;
  int threads = 1;
  double max_failure_fraction = 0.02;
};

struct ReplicationRecord {
  double rho = 0.0;
  std::size_t replication = 0;
  Scenario scenario = Scenario::B;
  double truth = 0.0;
  double pm = 0.0;
  double psd = 0.0;
  Interval hpd;
  bool covered = false;
  double a_mean = 1.0;
  double a_sd = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

struct MetricsRow {
  Scenario scenario = Scenario::B;
  double rho = 0.0;
  double arb = 0.0;
  double prmse = 0.0;
  double cov = 0.0;
  double wid = 0.0;
  double a_mean = 1.0;
  double a_sd = 0.0;
  std::size_t replications = 0;
};

struct PopulationInfo {
  double rho = 0.0;
  double theta0 = 0.0;
  double theta1 = 0.0;
  double sigma2 = 0.0;
  double correlation = 0.0;
  double true_mean = 0.0;
  std::size_t failures = 0;
};

struct StudyResult {
  std::vector<PopulationInfo> populations;
  std::vector<MetricsRow> rows;
  std::vector<ReplicationRecord> records;
};

/// One population per rho, R replications of (Poisson nps, systematic PPS ps),
/// every requested scenario fitted on each. Failed replications are skipped;
/// more than max_failure_fraction of them aborts.
StudyResult run_study(const StudySpec& spec);

/// measure,rho,<scenario letters>
void write_metrics_csv(std::ostream& out, const StudyResult& result, const std::vector<Scenario>& scenarios);
void write_summary_csv(std::ostream& out, const StudyResult& result);
void write_replications_csv(std::ostream& out, const StudyResult& result);

}  // namespace survint

#endif
