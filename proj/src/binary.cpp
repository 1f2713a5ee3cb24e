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

#include "survint/binary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survint/error.hpp"
#include "survint/parallel.hpp"
#include "survint/rng.hpp"

namespace survint {
namespace {

Eigen::ArrayXd softplus(const Eigen::ArrayXd& x) { return x.max(0.0) + (-x.abs()).exp().log1p(); }

Eigen::ArrayXd logistic(const Eigen::ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

void check_binary(const WeightedSample& s, Eigen::Index p, const char* label) {
  if (s.X.cols() != p || s.X.rows() != s.y.size() || s.w.size() != s.y.size()) {
    throw UsageError(std::string("binary model: dimension mismatch in the ") + label + " sample");
  }
  for (Eigen::Index i = 0; i < s.y.size(); ++i) {
    if (s.y[i] != 0.0 && s.y[i] != 1.0) {
      throw DataError(std::string("binary model: response must be 0 or 1 in the ") + label + " sample");
    }
  }
}

// Log-likelihood of one sample given its linear predictor and discount.
double sample_loglik(double scale, const Eigen::ArrayXd& lin, const WeightedSample& s, BinaryWeighting weighting) {
  if (scale == 0.0) {
    return weighting == BinaryWeighting::in_exponent ? -static_cast<double>(lin.size()) * std::log(2.0) : 0.0;
  }
  const Eigen::ArrayXd w = s.w.array();
  const Eigen::ArrayXd y = s.y.array();
  if (weighting == BinaryWeighting::in_exponent) {
    const Eigen::ArrayXd eta = scale * w * lin;
    return (y * eta - softplus(eta)).sum();
  }
  return scale * (w * (y * lin - softplus(lin))).sum();
}

// d/d lin and -d^2/d lin^2 of the per-unit log-likelihood.
void unit_derivatives(double scale, const Eigen::ArrayXd& lin, const WeightedSample& s, BinaryWeighting weighting,
                      Eigen::ArrayXd& score, Eigen::ArrayXd& info) {
  const Eigen::ArrayXd w = s.w.array();
  const Eigen::ArrayXd y = s.y.array();
  if (weighting == BinaryWeighting::in_exponent) {
    const Eigen::ArrayXd c = scale * w;
    const Eigen::ArrayXd pr = logistic(c * lin);
    score = c * (y - pr);
    info = c * c * pr * (1.0 - pr);
  } else {
    const Eigen::ArrayXd pr = logistic(lin);
    score = scale * w * (y - pr);
    info = scale * w * pr * (1.0 - pr);
  }
}

Eigen::VectorXd joint_mode(double a, const WeightedSample& nps, const WeightedSample& ps, BinaryWeighting weighting) {
  const Eigen::Index p = ps.X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto objective = [&](const Eigen::VectorXd& b) {
    return sample_loglik(a, (nps.X * b).array(), nps, weighting) + sample_loglik(1.0, (ps.X * b).array(), ps, weighting);
  };
  double f = objective(beta);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::ArrayXd s1, i1, s2, i2;
    unit_derivatives(a, (nps.X * beta).array(), nps, weighting, s1, i1);
    unit_derivatives(1.0, (ps.X * beta).array(), ps, weighting, s2, i2);
    const Eigen::VectorXd g = nps.X.transpose() * s1.matrix() + ps.X.transpose() * s2.matrix();
    const Eigen::MatrixXd H = nps.X.transpose() * i1.matrix().asDiagonal() * nps.X +
                              ps.X.transpose() * i2.matrix().asDiagonal() * ps.X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      throw NumericalError("binary model: information matrix is singular (separation?)");
    }
    Eigen::VectorXd step = ldlt.solve(g);
    double t = 1.0;
    Eigen::VectorXd next = beta + step;
    double fn = objective(next);
    while (!(fn >= f - 1e-12 * (1.0 + std::abs(f))) && t > 1e-10) {
      t *= 0.5;
      next = beta + t * step;
      fn = objective(next);
    }
    beta = next;
    f = fn;
    if (!beta.allFinite() || beta.cwiseAbs().maxCoeff() > 1e6) {
      throw NumericalError("binary model: coefficients diverge (separation)");
    }
    if ((t * step).norm() <= 1e-10 * (1.0 + beta.norm())) {
      return beta;
    }
  }
  throw NumericalError("binary model: posterior mode search did not converge (separation?)");
}

void assert_unimodal(const std::vector<double>& g, std::size_t coordinate) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : g) {
    top = std::max(top, std::abs(v));
  }
  const double tol = 1e-10 * (1.0 + top);
  bool descending = false;
  for (std::size_t k = 1; k < g.size(); ++k) {
    const double diff = g[k] - g[k - 1];
    if (diff < -tol) {
      descending = true;
    } else if (diff > tol && descending) {
      throw NumericalError("griddy Gibbs: conditional of coefficient " + std::to_string(coordinate + 1) +
                           " is not unimodal");
    }
  }
}

}  // namespace

double binary_log_posterior(double a, const Eigen::VectorXd& beta, const WeightedSample& nps,
                            const WeightedSample& ps, BinaryWeighting weighting) {
  const Eigen::Index p = beta.size();
  check_binary(nps, p, "nps");
  check_binary(ps, p, "ps");
  return sample_loglik(a, (nps.X * beta).array(), nps, weighting) +
         sample_loglik(1.0, (ps.X * beta).array(), ps, weighting);
}

Eigen::VectorXd binary_log_posterior_gradient(double a, const Eigen::VectorXd& beta, const WeightedSample& nps,
                                              const WeightedSample& ps, BinaryWeighting weighting) {
  const Eigen::Index p = beta.size();
  check_binary(nps, p, "nps");
  check_binary(ps, p, "ps");
  Eigen::ArrayXd s1, i1, s2, i2;
  unit_derivatives(a, (nps.X * beta).array(), nps, weighting, s1, i1);
  unit_derivatives(1.0, (ps.X * beta).array(), ps, weighting, s2, i2);
  return nps.X.transpose() * s1.matrix() + ps.X.transpose() * s2.matrix();
}

double batch_means_nse(const Eigen::VectorXd& chain) {
  const auto M = static_cast<std::size_t>(chain.size());
  const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(M))));
  if (batches < 2) {
    throw UsageError("batch means need at least 4 draws");
  }
  const std::size_t size = M / batches;
  Eigen::VectorXd means(static_cast<Eigen::Index>(batches));
  for (std::size_t b = 0; b < batches; ++b) {
    means[static_cast<Eigen::Index>(b)] =
        chain.segment(static_cast<Eigen::Index>(b * size), static_cast<Eigen::Index>(size)).mean();
  }
  const double centre = means.mean();
  const double var = (means.array() - centre).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

BinaryPosteriorDraws griddy_gibbs_binary(const WeightedSample& nps, const WeightedSample& ps,
                                         const BinaryGibbsSpec& spec) {
  const Eigen::Index p = ps.X.cols();
  check_binary(nps, p, "nps");
  check_binary(ps, p, "ps");
  if (spec.grid_points < 3 || spec.a_grid_points < 1 || spec.draws < 4 || spec.thin == 0 || !(spec.grid_sds > 0.0)) {
    throw UsageError("griddy Gibbs: invalid sampler settings");
  }
  if (!(spec.a_min >= 0.0 && spec.a_min <= spec.a_max && spec.a_max <= 1.0)) {
    throw UsageError("griddy Gibbs: discount range must satisfy 0 <= a_min <= a_max <= 1");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ps.X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw NumericalError("binary model: ps design matrix is rank deficient");
  }

  const bool fixed_a = spec.a_min == spec.a_max || spec.a_grid_points == 1;
  std::vector<double> a_grid;
  if (fixed_a) {
    a_grid.push_back(spec.a_max);
  } else {
    const double h = (spec.a_max - spec.a_min) / static_cast<double>(spec.a_grid_points - 1);
    for (std::size_t k = 0; k < spec.a_grid_points; ++k) {
      a_grid.push_back(spec.a_min + h * static_cast<double>(k));
    }
  }

  double a = spec.a_max;
  BinaryPosteriorDraws out;
  Eigen::VectorXd beta = joint_mode(a, nps, ps, spec.weighting);
  out.pilot_mode = beta;
  Eigen::ArrayXd lin1 = (nps.X * beta).array();
  Eigen::ArrayXd lin2 = (ps.X * beta).array();

  const std::size_t G = spec.grid_points;
  const auto M = static_cast<Eigen::Index>(spec.draws);
  out.beta.resize(M, p);
  out.a.resize(M);
  out.mean_half_width = Eigen::VectorXd::Zero(p);
  out.edge_hits.assign(static_cast<std::size_t>(p), 0);
  std::vector<int> consecutive_edges(static_cast<std::size_t>(p), 0);

  const std::size_t sweeps = spec.burnin + spec.thin * spec.draws;
  RngStream stream(spec.seed, stream_tag("binary-gibbs"));
  std::vector<double> g(G);
  std::vector<double> cumulative(G);
  std::vector<double> ga(a_grid.size());
  std::vector<double> cum_a(a_grid.size());
  Eigen::Index kept = 0;

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    UniformBlock block = stream.next_block();
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::ArrayXd x1 = nps.X.col(j).array();
      const Eigen::ArrayXd x2 = ps.X.col(j).array();
      Eigen::ArrayXd s1, i1, s2, i2;
      unit_derivatives(a, lin1, nps, spec.weighting, s1, i1);
      unit_derivatives(1.0, lin2, ps, spec.weighting, s2, i2);
      const double curvature = (i1 * x1 * x1).sum() + (i2 * x2 * x2).sum();
      if (!(curvature > 1e-300) || !std::isfinite(curvature)) {
        throw NumericalError("griddy Gibbs: flat conditional for coefficient " + std::to_string(j + 1) +
                             " (separation)");
      }
      const double half = spec.grid_sds / std::sqrt(curvature);
      const double step = 2.0 * half / static_cast<double>(G - 1);
      for (std::size_t k = 0; k < G; ++k) {
        const double delta = -half + step * static_cast<double>(k);
        g[k] = sample_loglik(a, lin1 + delta * x1, nps, spec.weighting) +
               sample_loglik(1.0, lin2 + delta * x2, ps, spec.weighting);
      }
      assert_unimodal(g, static_cast<std::size_t>(j));
      const Eigen::VectorXd mass = normalize_log_weights(g);
      double running = 0.0;
      for (std::size_t k = 0; k < G; ++k) {
        running += mass[static_cast<Eigen::Index>(k)];
        cumulative[k] = running;
      }
      const std::size_t k = lookup_cdf(cumulative, block.uniform());
      const double delta = -half + step * static_cast<double>(k) + step * (block.uniform() - 0.5);
      const bool edge = k == 0 || k == G - 1;
      auto& run = consecutive_edges[static_cast<std::size_t>(j)];
      run = edge ? run + 1 : 0;
      if (run >= 3) {
        throw NumericalError("griddy Gibbs: coefficient " + std::to_string(j + 1) +
                             " drawn at the grid edge in 3 consecutive sweeps (separation)");
      }
      beta[j] += delta;
      lin1 += delta * x1;
      lin2 += delta * x2;
      if (sweep >= spec.burnin) {
        out.mean_half_width[j] += half;
        if (edge) {
          ++out.edge_hits[static_cast<std::size_t>(j)];
        }
      }
    }
    if (!fixed_a) {
      for (std::size_t k = 0; k < a_grid.size(); ++k) {
        ga[k] = sample_loglik(a_grid[k], lin1, nps, spec.weighting);
      }
      const Eigen::VectorXd mass = normalize_log_weights(ga);
      double running = 0.0;
      for (std::size_t k = 0; k < a_grid.size(); ++k) {
        running += mass[static_cast<Eigen::Index>(k)];
        cum_a[k] = running;
      }
      a = a_grid[lookup_cdf(cum_a, block.uniform())];
    }
    if (sweep >= spec.burnin && (sweep - spec.burnin + 1) % spec.thin == 0) {
      out.beta.row(kept) = beta.transpose();
      out.a[kept] = a;
      ++kept;
    }
  }
  out.mean_half_width /= static_cast<double>(spec.thin * spec.draws);
  out.beta_nse.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    out.beta_nse[j] = batch_means_nse(out.beta.col(j));
  }
  out.a_nse = fixed_a ? 0.0 : batch_means_nse(out.a);
  return out;
}

Eigen::VectorXd bin_covariate(const Eigen::VectorXd& values, double width) {
  if (!(width > 0.0)) {
    throw UsageError("bin width must be positive");
  }
  return ((values.array() / width).floor() + 0.5) * width;
}

SurrogatePopulation resample_population_covariates(const Eigen::MatrixXd& pool, const Eigen::VectorXd& row_weights,
                                                   const PopulationFacts& facts, const ResampleSpec& spec) {
  const Eigen::Index p = pool.cols();
  if (pool.rows() == 0 || facts.xbar_hat.size() != p) {
    throw UsageError("population resampling: pool and population facts do not match");
  }
  if (!(facts.N_hat > 0.0)) {
    throw UsageError("population resampling: N_hat must be positive");
  }
  if (row_weights.size() != 0 && row_weights.size() != pool.rows()) {
    throw UsageError("population resampling: one weight per pool row is required");
  }
  const std::size_t N =
      spec.population_size > 0 ? spec.population_size : static_cast<std::size_t>(std::llround(facts.N_hat));
  if (N == 0 || spec.max_tries == 0 || !(spec.tolerance >= 0.0)) {
    throw UsageError("population resampling: invalid settings");
  }
  std::vector<double> cumulative(static_cast<std::size_t>(pool.rows()));
  double running = 0.0;
  for (Eigen::Index i = 0; i < pool.rows(); ++i) {
    const double w = row_weights.size() == 0 ? 1.0 : row_weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw UsageError("population resampling: row weights must be finite and nonnegative");
    }
    running += w;
    cumulative[static_cast<std::size_t>(i)] = running;
  }
  if (!(running > 0.0)) {
    throw UsageError("population resampling: row weights sum to zero");
  }

  const Eigen::VectorXd target = facts.N_hat * facts.xbar_hat;
  const std::uint64_t id = substream(stream_tag("population-resample"), spec.index);
  std::vector<Eigen::Index> rows(N);
  std::vector<Eigen::Index> best_rows;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_residual;
  std::size_t tries = 0;
  for (std::size_t t = 0; t < spec.max_tries; ++t) {
    ++tries;
    UniformBlock block = RngStream(spec.seed, id, t).next_block();
    Eigen::VectorXd total = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < N; ++i) {
      rows[i] = static_cast<Eigen::Index>(lookup_cdf(cumulative, block.uniform()));
      total += pool.row(rows[i]).transpose();
    }
    const Eigen::VectorXd residual = total - target;
    double relative = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double denom = target[j] != 0.0 ? std::abs(target[j]) : static_cast<double>(N);
      relative = std::max(relative, std::abs(residual[j]) / denom);
    }
    if (relative < best) {
      best = relative;
      best_rows = rows;
      best_residual = residual;
    }
    if (relative <= spec.tolerance) {
      break;
    }
  }
  if (!(best <= spec.tolerance)) {
    throw NumericalError("population resampling: constraint not met after " + std::to_string(spec.max_tries) +
                         " tries (best relative residual " + std::to_string(best) + ")");
  }
  SurrogatePopulation pop;
  pop.X.resize(static_cast<Eigen::Index>(N), p);
  for (std::size_t i = 0; i < N; ++i) {
    pop.X.row(static_cast<Eigen::Index>(i)) = pool.row(best_rows[i]);
  }
  pop.residual = best_residual;
  pop.relative_residual = best;
  pop.tries = tries;
  return pop;
}

namespace {

double score_population(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, UniformBlock& block) {
  const Eigen::ArrayXd prob = logistic((X * beta).array());
  std::size_t ones = 0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    if (block.uniform() <= prob[i]) {
      ++ones;
    }
  }
  return static_cast<double>(ones) / static_cast<double>(prob.size());
}

MeanPosterior finish(Eigen::VectorXd draws) {
  MeanPosterior out;
  out.draws = std::move(draws);
  if (out.draws.size() >= 100) {
    out.summary = summarize(out.draws);
    out.summary.nse = batch_means_nse(out.draws);
  }
  return out;
}

}  // namespace

MeanPosterior surrogate_proportion(const BinaryPosteriorDraws& draws, const SurrogatePopulation& pop,
                                   std::uint64_t seed, int threads) {
  if (pop.X.cols() != draws.beta.cols() || pop.X.rows() == 0) {
    throw UsageError("surrogate proportion: population does not match the model");
  }
  const auto M = static_cast<std::size_t>(draws.beta.rows());
  Eigen::VectorXd out(static_cast<Eigen::Index>(M));
  const std::uint64_t id = stream_tag("surrogate-proportion");
  parallel_for(M, threads, [&](std::size_t m) {
    UniformBlock block = RngStream(seed, id, m).next_block();
    const auto row = static_cast<Eigen::Index>(m);
    out[row] = score_population(draws.beta.row(row).transpose(), pop.X, block);
  });
  return finish(std::move(out));
}

MeanPosterior surrogate_proportion(const BinaryPosteriorDraws& draws, const Eigen::MatrixXd& pool,
                                   const Eigen::VectorXd& row_weights, const PopulationFacts& facts,
                                   const ResampleSpec& resample, std::size_t refresh_every, std::uint64_t seed,
                                   int threads) {
  if (refresh_every == 0) {
    throw UsageError("refresh_every must be positive");
  }
  if (pool.cols() != draws.beta.cols()) {
    throw UsageError("surrogate proportion: population does not match the model");
  }
  const auto M = static_cast<std::size_t>(draws.beta.rows());
  const std::size_t groups = (M + refresh_every - 1) / refresh_every;
  Eigen::VectorXd out(static_cast<Eigen::Index>(M));
  const std::uint64_t id = stream_tag("surrogate-proportion");
  parallel_for(groups, threads, [&](std::size_t b) {
    ResampleSpec spec = resample;
    spec.index = resample.index + b;
    const SurrogatePopulation pop = resample_population_covariates(pool, row_weights, facts, spec);
    const std::size_t end = std::min(M, (b + 1) * refresh_every);
    for (std::size_t m = b * refresh_every; m < end; ++m) {
      UniformBlock block = RngStream(seed, id, m).next_block();
      const auto row = static_cast<Eigen::Index>(m);
      out[row] = score_population(draws.beta.row(row).transpose(), pop.X, block);
    }
  });
  return finish(std::move(out));
}

}  // namespace survint
