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

#ifndef SURVINT_PREDICTION_HPP
#define SURVINT_PREDICTION_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "survint/dataset.hpp"
#include "survint/posterior.hpp"

namespace survint {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] double width() const { return upper - lower; }
  [[nodiscard]] bool contains(double x) const { return lower <= x && x <= upper; }
};

struct Summary {
  double pm = 0.0;
  double psd = 0.0;
  /// PSD / |PM|.
  double pcv = 0.0;
  /// PSD / sqrt(M); the draws are independent.
  double nse = 0.0;
  Interval hpd;
  std::size_t draws = 0;
};

struct MeanPosterior {
  Eigen::VectorXd draws;
  Summary summary;
};

/// Requires at least 100 draws. The HPD interval is the shortest window of
/// ceil(level * M) sorted draws; ties go to the lower start index.
Summary summarize(const Eigen::VectorXd& draws, double hpd_level = 0.95);

/// Central interval from the (1 - level)/2 and (1 + level)/2 empirical quantiles.
Interval equal_tailed(const Eigen::VectorXd& draws, double level = 0.95);

/// Ybar ~ Normal(xbar' beta, sigma^2 / N) for each parameter draw.
MeanPosterior surrogate_mean_draws(const PosteriorDraws& post, const PopulationFacts& facts, std::uint64_t seed,
                                   int threads = 1);

enum class PivotScale {
  /// sqrt((1/N + d q) / nu), as printed.
  literal,
  /// sqrt(d (1/N + q) / nu), which is what the sampler implies.
  consistent,
};

struct PivotParams {
  double center = 0.0;
  double scale = 0.0;
  double dof = 0.0;
};

/// Location, scale and degrees of freedom of the Student-t law of Ybar given a,
/// with q = xbar' A^{-1} xbar and nu = n - p.
PivotParams t_pivot_params(const GridPoint& point, const IntegratedSufficients& suff, const Eigen::VectorXd& xbar,
                           double N_hat, PivotScale form = PivotScale::consistent);

}  // namespace survint

#endif
