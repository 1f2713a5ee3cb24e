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

#include "survint/posterior.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "survint/error.hpp"
#include "survint/parallel.hpp"
#include "survint/rng.hpp"
#include "survint/weights.hpp"

namespace survint {

char scenario_letter(Scenario kind) {
  switch (kind) {
    case Scenario::B:
      return 'B';
    case Scenario::C:
      return 'C';
    case Scenario::D:
      return 'D';
    case Scenario::E:
      return 'E';
    case Scenario::G:
      return 'G';
  }
  return '?';
}

Scenario parse_scenario(std::string_view text) {
  if (text.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(text[0]))) {
      case 'B':
        return Scenario::B;
      case 'C':
        return Scenario::C;
      case 'D':
        return Scenario::D;
      case 'E':
        return Scenario::E;
      case 'G':
        return Scenario::G;
      default:
        break;
    }
  }
  throw UsageError("unknown scenario '" + std::string(text) + "' (expected one of B, C, D, E, G)");
}

bool has_discount(Scenario kind) { return kind == Scenario::C || kind == Scenario::D; }

std::vector<double> discount_grid(const ScenarioSpec& spec) {
  if (!(spec.a_min >= 0.0 && spec.a_min <= spec.a_max && spec.a_max <= 1.0 && spec.a_max > 0.0)) {
    throw UsageError("discount range must satisfy 0 <= a_min <= a_max <= 1 with a_max > 0");
  }
  if (spec.grid_size == 0) {
    throw UsageError("grid_size must be positive");
  }
  if (spec.a_min == spec.a_max) {
    return {spec.a_max};
  }
  std::vector<double> grid(spec.grid_size);
  const double h = (spec.a_max - spec.a_min) / static_cast<double>(spec.grid_size);
  for (std::size_t k = 0; k < spec.grid_size; ++k) {
    grid[k] = spec.a_min + (static_cast<double>(k) + 0.5) * h;
  }
  return grid;
}

WeightedSample with_adjusted_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& W) {
  if (X.rows() != y.size() || W.size() != y.size()) {
    throw UsageError("weighted sample: dimension mismatch");
  }
  return WeightedSample{X, y, adjust_weights(W).w};
}

WeightedSample with_unit_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw UsageError("weighted sample: dimension mismatch");
  }
  return WeightedSample{X, y, Eigen::VectorXd::Ones(y.size())};
}

namespace {

struct SampleMoments {
  Eigen::MatrixXd S;  // X' W X
  Eigen::VectorXd g;  // X' W r, with r = y - X beta0
  double rr = 0.0;    // r' W r
  double yy = 0.0;    // y' W y
  Eigen::Index n = 0;
};

}  // namespace

IntegratedSufficients integrated_sufficients(const std::vector<const WeightedSample*>& samples,
                                             const std::vector<bool>& discounted, const std::vector<double>& grid,
                                             Scenario kind, int threads) {
  if (samples.empty() || samples.size() != discounted.size() || grid.empty()) {
    throw UsageError("integrated_sufficients: bad arguments");
  }
  const Eigen::Index p = samples.front()->X.cols();
  IntegratedSufficients suff;
  suff.kind = kind;
  suff.p = p;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const WeightedSample& sample = *samples[s];
    if (sample.X.cols() != p || sample.X.rows() != sample.y.size() || sample.w.size() != sample.y.size()) {
      throw UsageError("integrated_sufficients: dimension mismatch");
    }
    if ((sample.w.array() <= 0.0).any() || !sample.w.allFinite()) {
      throw DataError("integrated_sufficients: weights must be positive");
    }
    suff.n_total += sample.y.size();
    if (discounted[s]) {
      suff.n_discounted += sample.y.size();
    }
  }
  if (suff.n_total <= p) {
    throw NumericalError("posterior is improper: n = " + std::to_string(suff.n_total) +
                         " does not exceed p = " + std::to_string(p));
  }

  // Residuals are taken around the undiscounted fit to keep d(a) free of cancellation.
  Eigen::MatrixXd S_all = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd u_all = Eigen::VectorXd::Zero(p);
  for (const auto* sample : samples) {
    S_all.noalias() += sample->X.transpose() * sample->w.asDiagonal() * sample->X;
    u_all.noalias() += sample->X.transpose() * sample->w.cwiseProduct(sample->y);
  }
  Eigen::LDLT<Eigen::MatrixXd> pooled(S_all);
  if (pooled.info() != Eigen::Success) {
    throw NumericalError("design matrix is rank deficient");
  }
  const Eigen::VectorXd beta0 = pooled.solve(u_all);

  std::vector<SampleMoments> moments(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const WeightedSample& sample = *samples[s];
    const Eigen::VectorXd r = sample.y - sample.X * beta0;
    const Eigen::VectorXd wr = sample.w.cwiseProduct(r);
    moments[s].S = sample.X.transpose() * sample.w.asDiagonal() * sample.X;
    moments[s].g = sample.X.transpose() * wr;
    moments[s].rr = r.dot(wr);
    moments[s].yy = sample.y.dot(sample.w.cwiseProduct(sample.y));
    moments[s].n = sample.y.size();
  }

  suff.points.resize(grid.size());
  const double shape = suff.shape();
  const double half_disc = 0.5 * static_cast<double>(suff.n_discounted);
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    GridPoint& gp = suff.points[k];
    gp.a = grid[k];
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    double rr = 0.0;
    double yy = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double scale = discounted[s] ? gp.a : 1.0;
      A.noalias() += scale * moments[s].S;
      c.noalias() += scale * moments[s].g;
      rr += scale * moments[s].rr;
      yy += scale * moments[s].yy;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("design matrix is rank deficient at a = " + std::to_string(gp.a));
    }
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::VectorXd diag2 = L.diagonal().array().square();
    if (diag2.minCoeff() <= 1e-12 * diag2.maxCoeff()) {
      throw NumericalError("design matrix is rank deficient at a = " + std::to_string(gp.a));
    }
    const Eigen::VectorXd delta = llt.solve(c);
    gp.A = A;
    gp.beta_hat = beta0 + delta;
    gp.b = A * gp.beta_hat;
    gp.d = rr - c.dot(delta);
    if (!(gp.d > 1e-13 * std::max(yy, std::numeric_limits<double>::min()))) {
      throw NumericalError("residual sum of squares is zero at a = " + std::to_string(gp.a) +
                           ": the model is saturated, sigma^2 has no proper posterior");
    }
    gp.log_det_A = 2.0 * L.diagonal().array().log().sum();
    gp.log_density = half_disc * std::log(gp.a) - 0.5 * gp.log_det_A - shape * std::log(gp.d);
    gp.cov_factor = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  });

  std::vector<double> log_density(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    log_density[k] = suff.points[k].log_density;
  }
  suff.mass = normalize_log_weights(log_density);
  return suff;
}

PosteriorDraws sample_posterior(const IntegratedSufficients& suff, const ScenarioSpec& spec) {
  const Eigen::Index p = suff.p;
  const auto M = static_cast<Eigen::Index>(spec.draws);
  PosteriorDraws out;
  out.scenario = spec;
  out.beta.resize(M, p);
  out.sigma2.resize(M);
  out.a.resize(M);

  const auto K = static_cast<Eigen::Index>(suff.points.size());
  out.a_grid.resize(K);
  out.a_mass = suff.mass;
  std::vector<double> cumulative(static_cast<std::size_t>(K));
  double running = 0.0;
  double overlap = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    out.a_grid[k] = suff.points[static_cast<std::size_t>(k)].a;
    running += suff.mass[k];
    cumulative[static_cast<std::size_t>(k)] = running;
    overlap += std::min(suff.mass[k], 1.0 / static_cast<double>(K));
  }
  out.a_posterior_mean = out.a_grid.dot(out.a_mass);
  out.a_prior_overlap = overlap;

  const double shape = suff.shape();
  const std::uint64_t stream_id = stream_tag("posterior");
  parallel_for(static_cast<std::size_t>(M), spec.threads, [&](std::size_t m) {
    RngStream stream(spec.seed, stream_id, m);
    UniformBlock block = stream.next_block();
    const std::size_t k = lookup_cdf(cumulative, block.uniform());
    const GridPoint& gp = suff.points[k];
    const double sigma2 = 0.5 * gp.d / gamma_from_block(shape, block);
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      z[j] = block.normal();
    }
    const auto row = static_cast<Eigen::Index>(m);
    out.a[row] = gp.a;
    out.sigma2[row] = sigma2;
    const Eigen::VectorXd fz = gp.cov_factor.triangularView<Eigen::Upper>() * z;
    out.beta.row(row) = (gp.beta_hat + std::sqrt(sigma2) * fz).transpose();
  });
  return out;
}

PosteriorDraws fit_nps_only(const WeightedSample& nps, const ScenarioSpec& spec) {
  ScenarioSpec s = spec;
  s.kind = Scenario::B;
  const auto suff = integrated_sufficients({&nps}, {false}, {1.0}, Scenario::B, spec.threads);
  return sample_posterior(suff, s);
}

PosteriorDraws fit_integrated(const WeightedSample& nps, const WeightedSample& ps, const ScenarioSpec& spec) {
  if (!has_discount(spec.kind)) {
    throw UsageError("fit_integrated handles scenarios C and D only");
  }
  const bool nps_discounted = spec.kind == Scenario::C;
  const auto suff = integrated_sufficients({&nps, &ps}, {nps_discounted, !nps_discounted}, discount_grid(spec),
                                           spec.kind, spec.threads);
  return sample_posterior(suff, spec);
}

PosteriorDraws fit_ps_only(const WeightedSample& ps, bool weighted, const ScenarioSpec& spec) {
  ScenarioSpec s = spec;
  s.kind = weighted ? Scenario::E : Scenario::G;
  if (weighted) {
    const auto suff = integrated_sufficients({&ps}, {false}, {1.0}, s.kind, spec.threads);
    return sample_posterior(suff, s);
  }
  const WeightedSample unit = with_unit_weights(ps.X, ps.y);
  const auto suff = integrated_sufficients({&unit}, {false}, {1.0}, s.kind, spec.threads);
  return sample_posterior(suff, s);
}

IntegratedSufficients scenario_sufficients(const WeightedSample& nps, const WeightedSample& ps,
                                           const ScenarioSpec& spec) {
  switch (spec.kind) {
    case Scenario::B:
      return integrated_sufficients({&nps}, {false}, {1.0}, spec.kind, spec.threads);
    case Scenario::C:
    case Scenario::D: {
      const bool nps_discounted = spec.kind == Scenario::C;
      return integrated_sufficients({&nps, &ps}, {nps_discounted, !nps_discounted}, discount_grid(spec), spec.kind,
                                    spec.threads);
    }
    case Scenario::E:
      return integrated_sufficients({&ps}, {false}, {1.0}, spec.kind, spec.threads);
    case Scenario::G: {
      const WeightedSample unit = with_unit_weights(ps.X, ps.y);
      return integrated_sufficients({&unit}, {false}, {1.0}, spec.kind, spec.threads);
    }
  }
  throw UsageError("unknown scenario");
}

PosteriorDraws fit_scenario(const WeightedSample& nps, const WeightedSample& ps, const ScenarioSpec& spec) {
  return sample_posterior(scenario_sufficients(nps, ps, spec), spec);
}

double LocationModelPosterior::lambda(double a) const { return a * n1 / (a * n1 + n2); }

double LocationModelPosterior::theta_mean(double a) const {
  const double l = lambda(a);
  return l * ybar1 + (1.0 - l) * ybar2;
}

double LocationModelPosterior::theta_variance_factor(double a) const { return (1.0 - lambda(a)) / n2; }

double LocationModelPosterior::sigma2_scale(double a) const {
  const double diff = ybar1 - ybar2;
  return 0.5 * (n2 * lambda(a) * diff * diff + a * (n1 - 1.0) * s1sq + (n2 - 1.0) * s2sq);
}

double LocationModelPosterior::log_density_at(double a) const {
  const double l = lambda(a);
  const double diff = ybar1 - ybar2;
  const double denominator = n2 * l * diff * diff + a * (n1 - 1.0) * s1sq + (n2 - 1.0) * s2sq;
  return 0.5 * n1 * std::log(a) + 0.5 * std::log((1.0 - l) / n2) - 0.5 * (n1 + n2 - 1.0) * std::log(denominator);
}

double LocationModelPosterior::a_mean() const { return grid.dot(mass); }

Eigen::MatrixXd LocationModelPosterior::draw(std::size_t m, std::uint64_t seed) const {
  std::vector<double> cumulative(static_cast<std::size_t>(mass.size()));
  double running = 0.0;
  for (Eigen::Index k = 0; k < mass.size(); ++k) {
    running += mass[k];
    cumulative[static_cast<std::size_t>(k)] = running;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m), 3);
  const std::uint64_t id = stream_tag("location-model");
  for (std::size_t i = 0; i < m; ++i) {
    RngStream stream(seed, id, i);
    const double a = grid[static_cast<Eigen::Index>(lookup_cdf(cumulative, draw_uniform(stream)))];
    const double sigma2 = draw_inverse_gamma(sigma2_shape(), sigma2_scale(a), stream);
    const double theta = theta_mean(a) + std::sqrt(sigma2 * theta_variance_factor(a)) * draw_normal(stream);
    out.row(static_cast<Eigen::Index>(i)) << a, sigma2, theta;
  }
  return out;
}

LocationModelPosterior location_model_posterior(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
                                                std::size_t grid_size) {
  if (y1.size() < 2 || y2.size() < 2) {
    throw DataError("location model needs at least two observations per sample");
  }
  if (grid_size == 0) {
    throw UsageError("grid_size must be positive");
  }
  LocationModelPosterior post;
  post.n1 = static_cast<double>(y1.size());
  post.n2 = static_cast<double>(y2.size());
  post.ybar1 = y1.mean();
  post.ybar2 = y2.mean();
  post.s1sq = (y1.array() - post.ybar1).square().sum() / (post.n1 - 1.0);
  post.s2sq = (y2.array() - post.ybar2).square().sum() / (post.n2 - 1.0);
  post.grid.resize(static_cast<Eigen::Index>(grid_size));
  post.log_density.resize(post.grid.size());
  for (Eigen::Index k = 0; k < post.grid.size(); ++k) {
    post.grid[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(grid_size);
    post.log_density[k] = post.log_density_at(post.grid[k]);
  }
  post.mass = normalize_log_weights(std::span<const double>(post.log_density.data(), grid_size));
  return post;
}

}  // namespace survint
