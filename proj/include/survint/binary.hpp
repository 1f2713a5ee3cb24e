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

#ifndef SURVINT_BINARY_HPP
#define SURVINT_BINARY_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "survint/posterior.hpp"
#include "survint/prediction.hpp"

namespace survint {

/// How a unit's adjusted weight enters the logistic likelihood.
enum class BinaryWeighting {
  /// a_s w x'beta inside the logistic exponent.
  in_exponent,
  /// w a_s times the unweighted log-likelihood contribution.
  as_power,
};

/// Log of the joint posterior of (a, beta) under the flat prior; the nps sample
/// carries the discount a, the ps sample carries 1. Stable for large |x'beta|.
double binary_log_posterior(double a, const Eigen::VectorXd& beta, const WeightedSample& nps,
                            const WeightedSample& ps, BinaryWeighting weighting = BinaryWeighting::in_exponent);

/// Gradient of binary_log_posterior with respect to beta.
Eigen::VectorXd binary_log_posterior_gradient(double a, const Eigen::VectorXd& beta, const WeightedSample& nps,
                                              const WeightedSample& ps,
                                              BinaryWeighting weighting = BinaryWeighting::in_exponent);

struct BinaryGibbsSpec {
  std::size_t grid_points = 201;
  /// Half-width of each beta grid in conditional standard deviations.
  double grid_sds = 6.0;
  std::size_t a_grid_points = 201;
  /// a takes values on an even grid over [a_min, a_max]; equal bounds fix a.
  double a_min = 0.0;
  double a_max = 1.0;
  std::size_t burnin = 1000;
  std::size_t thin = 5;
  std::size_t draws = 5000;
  std::uint64_t seed = 1;
  BinaryWeighting weighting = BinaryWeighting::in_exponent;
};

struct BinaryPosteriorDraws {
  Eigen::MatrixXd beta;
  Eigen::VectorXd a;
  /// Batch-means Monte Carlo standard errors of the posterior means of beta.
  Eigen::VectorXd beta_nse;
  double a_nse = 0.0;
  /// Per coordinate: average grid half-width and the number of draws landing in an edge cell.
  Eigen::VectorXd mean_half_width;
  std::vector<std::size_t> edge_hits;
  /// Posterior mode of beta at the initial a, used to start the chain.
  Eigen::VectorXd pilot_mode;
};

/// Griddy Gibbs sampler for (a, beta). Throws NumericalError when the ps design is
/// rank deficient, when a conditional is not unimodal, or on separation.
BinaryPosteriorDraws griddy_gibbs_binary(const WeightedSample& nps, const WeightedSample& ps,
                                         const BinaryGibbsSpec& spec);

/// Batch-means standard error of the mean of a chain (floor(sqrt(M)) batches).
double batch_means_nse(const Eigen::VectorXd& chain);

/// Midpoints of classes of the given width (e.g. 5-year age classes).
Eigen::VectorXd bin_covariate(const Eigen::VectorXd& values, double width = 5.0);

struct SurrogatePopulation {
  Eigen::MatrixXd X;
  /// sum_i x_i minus the target totals.
  Eigen::VectorXd residual;
  /// Largest componentwise |residual| / |target|.
  double relative_residual = 0.0;
  std::size_t tries = 0;
};

struct ResampleSpec {
  /// Number of units; 0 means round(N_hat).
  std::size_t population_size = 0;
  double tolerance = 0.01;
  std::size_t max_tries = 10000;
  std::uint64_t seed = 1;
  /// Stream index, so that several populations can be drawn from one seed.
  std::uint64_t index = 0;
};

/// Draws population rows with replacement from `pool` (probabilities proportional to
/// `row_weights`, uniform when empty) until every column total is within
/// `tolerance` of totals = N_hat * xbar_hat. Throws NumericalError with the best
/// residual when max_tries is exhausted.
SurrogatePopulation resample_population_covariates(const Eigen::MatrixXd& pool, const Eigen::VectorXd& row_weights,
                                                   const PopulationFacts& facts, const ResampleSpec& spec);

/// Ybar = mean of y_i with y_i = 1 when u_i <= logistic(x_i'beta), one draw per
/// row of `draws.beta`, all on the same population.
MeanPosterior surrogate_proportion(const BinaryPosteriorDraws& draws, const SurrogatePopulation& pop,
                                   std::uint64_t seed, int threads = 1);

/// Same, with a fresh population resampled for every `refresh_every` draws.
MeanPosterior surrogate_proportion(const BinaryPosteriorDraws& draws, const Eigen::MatrixXd& pool,
                                   const Eigen::VectorXd& row_weights, const PopulationFacts& facts,
                                   const ResampleSpec& resample, std::size_t refresh_every, std::uint64_t seed,
                                   int threads = 1);

}  // namespace survint

#endif
