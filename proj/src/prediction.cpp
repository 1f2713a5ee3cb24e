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

#include "survint/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "survint/error.hpp"
#include "survint/parallel.hpp"
#include "survint/rng.hpp"
#include "survint/weights.hpp"

namespace survint {

Summary summarize(const Eigen::VectorXd& draws, double hpd_level) {
  const auto M = static_cast<std::size_t>(draws.size());
  if (M < 100) {
    throw UsageError("summaries need at least 100 draws, got " + std::to_string(M));
  }
  if (!(hpd_level > 0.0 && hpd_level < 1.0)) {
    throw UsageError("hpd level must lie in (0, 1)");
  }
  if (!draws.allFinite()) {
    throw NumericalError("non-finite posterior draw");
  }
  Summary s;
  s.draws = M;
  s.pm = draws.mean();
  const double ss = (draws.array() - s.pm).square().sum();
  s.psd = std::sqrt(ss / static_cast<double>(M - 1));
  s.pcv = s.psd / std::abs(s.pm);
  s.nse = s.psd / std::sqrt(static_cast<double>(M));

  std::vector<double> sorted(draws.data(), draws.data() + M);
  std::sort(sorted.begin(), sorted.end());
  const auto window = static_cast<std::size_t>(std::ceil(hpd_level * static_cast<double>(M) - 1e-9));
  std::size_t best = 0;
  double best_width = sorted[window - 1] - sorted[0];
  for (std::size_t i = 1; i + window <= M; ++i) {
    const double width = sorted[i + window - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  s.hpd = {sorted[best], sorted[best + window - 1]};
  return s;
}

Interval equal_tailed(const Eigen::VectorXd& draws, double level) {
  if (draws.size() < 2) {
    throw UsageError("equal-tailed interval needs at least two draws");
  }
  const double tail = 0.5 * (1.0 - level);
  return {quantile_linear(draws, tail), quantile_linear(draws, 1.0 - tail)};
}

MeanPosterior surrogate_mean_draws(const PosteriorDraws& post, const PopulationFacts& facts, std::uint64_t seed,
                                   int threads) {
  if (!(facts.N_hat > 0.0)) {
    throw UsageError("population size estimate must be positive");
  }
  if (facts.xbar_hat.size() != post.beta.cols()) {
    throw UsageError("population means have " + std::to_string(facts.xbar_hat.size()) +
                     " entries but the model has " + std::to_string(post.beta.cols()) + " coefficients");
  }
  const auto M = static_cast<std::size_t>(post.beta.rows());
  MeanPosterior out;
  out.draws.resize(static_cast<Eigen::Index>(M));
  const std::uint64_t id = stream_tag("surrogate-mean");
  const Eigen::VectorXd centers = post.beta * facts.xbar_hat;
  parallel_for(M, threads, [&](std::size_t m) {
    RngStream stream(seed, id, m);
    const auto i = static_cast<Eigen::Index>(m);
    const double sd = std::sqrt(std::max(post.sigma2[i], 0.0) / facts.N_hat);
    out.draws[i] = sd > 0.0 ? centers[i] + sd * draw_normal(stream) : centers[i];
  });
  if (M >= 100) {
    out.summary = summarize(out.draws);
  }
  return out;
}

PivotParams t_pivot_params(const GridPoint& point, const IntegratedSufficients& suff, const Eigen::VectorXd& xbar,
                           double N_hat, PivotScale form) {
  if (!(point.d > 0.0)) {
    throw NumericalError("t pivot needs a positive residual sum of squares");
  }
  if (!(N_hat > 0.0) || xbar.size() != point.beta_hat.size()) {
    throw UsageError("t pivot: bad population facts");
  }
  const double nu = static_cast<double>(suff.dof());
  const Eigen::VectorXd Fx = point.cov_factor.transpose() * xbar;
  const double q = Fx.squaredNorm();
  PivotParams out;
  out.center = xbar.dot(point.beta_hat);
  out.dof = nu;
  const double var = form == PivotScale::literal ? (1.0 / N_hat + point.d * q) / nu : point.d * (1.0 / N_hat + q) / nu;
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NumericalError("t pivot scale is not positive");
  }
  out.scale = std::sqrt(var);
  return out;
}

}  // namespace survint
