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

#ifndef SURVINT_POSTERIOR_HPP
#define SURVINT_POSTERIOR_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

/**
 * \file
 * \brief Exact (non-Markov) posterior samplers for the Gaussian regression
 * scenarios, with the power-prior discount factor drawn on a grid.
 *
 * Scenarios:
 *  - B: nps only, estimated nps weights, a = 1.
 *  - C: nps discounted by a, ps undiscounted.
 *  - D: ps discounted by a, nps undiscounted.
 *  - E: ps only with adjusted design weights, a = 1.
 *  - G: ps only with unit weights, a = 1.
 *
 * Draws follow the multiplication rule a -> sigma^2 | a -> beta | sigma^2, a,
 * using grid quantities that are computed once per grid point.
 */

namespace survint {

enum class Scenario { B, C, D, E, G };

char scenario_letter(Scenario kind);
/// Accepts "B".."G" (case-insensitive). Throws UsageError otherwise.
Scenario parse_scenario(std::string_view text);
inline constexpr Scenario kAllScenarios[] = {Scenario::B, Scenario::C, Scenario::D, Scenario::E, Scenario::G};

/// True for the scenarios with a random discount factor (C, D).
bool has_discount(Scenario kind);

struct ScenarioSpec {
  Scenario kind = Scenario::C;
  /// Range of the discount factor; (a_min, a_max] is split into grid_size cells.
  /// a_min == a_max fixes a at that value.
  double a_min = 0.0;
  double a_max = 1.0;
  std::size_t grid_size = 1000;
  std::size_t draws = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Validates the range and returns the cell midpoints (or the single fixed value).
std::vector<double> discount_grid(const ScenarioSpec& spec);

/// Design matrix, responses and adjusted weights of one sample.
struct WeightedSample {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

/// Copies X and y and replaces the weights by their adjusted version (sum = n_o).
WeightedSample with_adjusted_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& W);

/// Unit weights.
WeightedSample with_unit_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Quantities of the integrated posterior at one value of a.
struct GridPoint {
  double a = 1.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd beta_hat;
  double d = 0.0;
  double log_det_A = 0.0;
  /// Unnormalized log pi(a | y).
  double log_density = 0.0;
  /// Upper factor F with F F' = A^{-1}.
  Eigen::MatrixXd cov_factor;
};

struct IntegratedSufficients {
  Scenario kind = Scenario::C;
  std::vector<GridPoint> points;
  /// Normalized grid masses of a.
  Eigen::VectorXd mass;
  Eigen::Index n_total = 0;
  Eigen::Index p = 0;
  Eigen::Index n_discounted = 0;

  /// (n_total - p) / 2, the shape of sigma^2 | a.
  [[nodiscard]] double shape() const { return 0.5 * static_cast<double>(n_total - p); }
  [[nodiscard]] Eigen::Index dof() const { return n_total - p; }
};

/// Grid quantities for a set of samples; `discounted[s]` marks the samples whose
/// weights are multiplied by a. Throws NumericalError on rank deficiency or a saturated fit.
IntegratedSufficients integrated_sufficients(const std::vector<const WeightedSample*>& samples,
                                             const std::vector<bool>& discounted, const std::vector<double>& grid,
                                             Scenario kind, int threads = 1);

struct PosteriorDraws {
  Eigen::MatrixXd beta;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd a;
  ScenarioSpec scenario;
  Eigen::VectorXd a_grid;
  Eigen::VectorXd a_mass;
  /// E[a | y] from the grid masses.
  double a_posterior_mean = 1.0;
  /// sum_k min(mass_k, prior_k): overlap of the discrete posterior and uniform prior of a.
  double a_prior_overlap = 1.0;
};

/// Multiplication-rule draws from precomputed grid quantities; draw m uses counter m
/// of a stream keyed by the seed, so output is independent of `threads`.
PosteriorDraws sample_posterior(const IntegratedSufficients& suff, const ScenarioSpec& spec);

/// Scenario B.
PosteriorDraws fit_nps_only(const WeightedSample& nps, const ScenarioSpec& spec);

/// Scenarios C (nps discounted) and D (ps discounted).
PosteriorDraws fit_integrated(const WeightedSample& nps, const WeightedSample& ps, const ScenarioSpec& spec);

/// Scenario E (weighted) or G (unit weights).
PosteriorDraws fit_ps_only(const WeightedSample& ps, bool weighted, const ScenarioSpec& spec);

/// Dispatches on spec.kind.
PosteriorDraws fit_scenario(const WeightedSample& nps, const WeightedSample& ps, const ScenarioSpec& spec);

/// Grid quantities for the given scenario (what fit_scenario samples from).
IntegratedSufficients scenario_sufficients(const WeightedSample& nps, const WeightedSample& ps,
                                           const ScenarioSpec& spec);

/// Closed-form posterior of the normal location model with a discounted first sample.
struct LocationModelPosterior {
  double n1 = 0.0;
  double n2 = 0.0;
  double ybar1 = 0.0;
  double ybar2 = 0.0;
  double s1sq = 0.0;
  double s2sq = 0.0;
  Eigen::VectorXd grid;
  /// log pi(a | D) up to a constant.
  Eigen::VectorXd log_density;
  Eigen::VectorXd mass;

  /// a n1 / (a n1 + n2).
  [[nodiscard]] double lambda(double a) const;
  /// Mean of theta | sigma^2, a.
  [[nodiscard]] double theta_mean(double a) const;
  /// Variance of theta | sigma^2, a divided by sigma^2.
  [[nodiscard]] double theta_variance_factor(double a) const;
  /// Scale of the inverse-gamma law of sigma^2 | a.
  [[nodiscard]] double sigma2_scale(double a) const;
  /// Shape of the inverse-gamma law of sigma^2 | a.
  [[nodiscard]] double sigma2_shape() const { return 0.5 * (n1 + n2 - 1.0); }
  /// Unnormalized log pi(a | D) at any a in [0, 1].
  [[nodiscard]] double log_density_at(double a) const;
  /// E[a | D] from the grid masses.
  [[nodiscard]] double a_mean() const;

  /// Three-stage draws of (a, sigma^2, theta), one row each.
  [[nodiscard]] Eigen::MatrixXd draw(std::size_t m, std::uint64_t seed) const;
};

/// Requires n1, n2 >= 2. The grid is the cell midpoints of (0, 1].
LocationModelPosterior location_model_posterior(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
                                                std::size_t grid_size = 1000);

}  // namespace survint

#endif
