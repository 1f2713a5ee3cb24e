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

#include "survint/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "survint/error.hpp"

namespace survint {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_positive(const VectorRef& W, const char* what) {
  if (W.size() == 0) {
    throw DataError(std::string(what) + ": empty weight vector");
  }
  for (Eigen::Index i = 0; i < W.size(); ++i) {
    if (!(W[i] > 0.0) || !std::isfinite(W[i])) {
      throw DataError(std::string(what) + ": nonpositive weight at position " + std::to_string(i + 1));
    }
  }
}

void check_dimensions(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2) {
  if (Z1.cols() != theta.size() || Z2.cols() != theta.size() || Z2.rows() != W2.size()) {
    throw UsageError("propensity model: dimension mismatch");
  }
}

}  // namespace

double effective_sample_size(const VectorRef& W) {
  check_positive(W, "effective_sample_size");
  const double total = W.sum();
  return total * total / W.squaredNorm();
}

WeightSet adjust_weights(const VectorRef& W) {
  WeightSet set;
  set.W = W;
  set.n_o = effective_sample_size(W);
  set.w = W * (set.n_o / W.sum());
  return set;
}

double clw_pseudo_loglik(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2) {
  check_dimensions(theta, Z1, Z2, W2);
  // log{pi / (1 - pi)} is the linear predictor itself under the logit link.
  double value = (Z1 * theta).sum();
  const Eigen::VectorXd eta2 = Z2 * theta;
  for (Eigen::Index i = 0; i < eta2.size(); ++i) {
    value -= W2[i] * softplus(eta2[i]);
  }
  return value;
}

Eigen::VectorXd clw_gradient(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2) {
  check_dimensions(theta, Z1, Z2, W2);
  const Eigen::VectorXd eta2 = Z2 * theta;
  Eigen::VectorXd a2(eta2.size());
  for (Eigen::Index i = 0; i < eta2.size(); ++i) {
    a2[i] = W2[i] * logistic(eta2[i]);
  }
  return Z1.colwise().sum().transpose() - Z2.transpose() * a2;
}

Eigen::MatrixXd clw_hessian(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2) {
  check_dimensions(theta, Z1, Z2, W2);
  const Eigen::VectorXd eta2 = Z2 * theta;
  Eigen::VectorXd v2(eta2.size());
  for (Eigen::Index i = 0; i < eta2.size(); ++i) {
    const double p = logistic(eta2[i]);
    v2[i] = W2[i] * p * (1.0 - p);
  }
  return -(Z2.transpose() * v2.asDiagonal() * Z2);
}

PropensityFit estimate_propensity(const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2,
                                  const PropensityOptions& options) {
  const Eigen::Index q = Z1.cols();
  if (Z2.cols() != q || Z2.rows() != W2.size()) {
    throw UsageError("estimate_propensity: dimension mismatch");
  }
  check_positive(W2, "estimate_propensity");
  {
    Eigen::MatrixXd stacked(Z1.rows() + Z2.rows(), q);
    stacked << Z1, Z2;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) {
      throw NumericalError("estimate_propensity: combined participation design is rank deficient");
    }
  }

  auto objective = [&](const Eigen::VectorXd& th) { return clw_pseudo_loglik(th, Z1, Z2, W2); };
  auto small_step = [&](const Eigen::VectorXd& step, const Eigen::VectorXd& th) {
    return (step.array().abs() <= options.tol * (1.0 + th.array().abs())).all();
  };

  PropensityFit fit;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(q);
  double value = objective(theta);
  bool converged = false;
  int iter = 0;

  for (; iter < options.max_iter && !converged; ++iter) {
    const Eigen::VectorXd g = clw_gradient(theta, Z1, Z2, W2);
    const Eigen::MatrixXd negH = -clw_hessian(theta, Z1, Z2, W2);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(negH);
    if (ldlt.info() != Eigen::Success || !g.allFinite()) {
      break;
    }
    const Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) {
      break;
    }
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      const Eigen::VectorXd candidate = theta + t * step;
      const double cv = objective(candidate);
      // Relative slack absorbs rounding once the ascent has stalled at the optimum.
      if (std::isfinite(cv) && cv >= value - 1e-13 * (1.0 + std::abs(value))) {
        theta = candidate;
        value = cv;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
    if (t == 1.0 && small_step(step, theta)) {
      converged = true;
    }
  }

  if (!converged) {
    // Gradient ascent with Armijo backtracking, restarted from the origin.
    fit.used_fallback = true;
    theta.setZero();
    value = objective(theta);
    double step_size = 1.0;
    for (int k = 0; k < options.fallback_iter && !converged; ++k, ++iter) {
      const Eigen::VectorXd g = clw_gradient(theta, Z1, Z2, W2);
      const double gg = g.squaredNorm();
      if (gg == 0.0) {
        converged = true;
        break;
      }
      step_size = std::min(step_size * 2.0, 1e6);
      bool accepted = false;
      for (int h = 0; h < 200; ++h, step_size *= 0.5) {
        const Eigen::VectorXd candidate = theta + step_size * g;
        const double cv = objective(candidate);
        if (std::isfinite(cv) && cv >= value + 1e-4 * step_size * gg) {
          const Eigen::VectorXd delta = candidate - theta;
          theta = candidate;
          value = cv;
          accepted = true;
          converged = small_step(delta, theta);
          break;
        }
      }
      if (!accepted) {
        // No ascent possible at working precision.
        converged = true;
      }
    }
  }

  fit.theta = theta;
  fit.iterations = iter;
  fit.converged = converged;
  fit.final_gradient_norm = clw_gradient(theta, Z1, Z2, W2).norm();
  if (!converged) {
    throw NumericalError("estimate_propensity: no convergence after " + std::to_string(iter) +
                         " iterations (gradient norm " + std::to_string(fit.final_gradient_norm) + ")");
  }
  const Eigen::VectorXd eta1 = Z1 * theta;
  fit.pi.resize(eta1.size());
  fit.W1.resize(eta1.size());
  for (Eigen::Index i = 0; i < eta1.size(); ++i) {
    fit.pi[i] = logistic(eta1[i]);
    // 1/pi = 1 + exp(-eta), exact even when pi rounds to 1.
    fit.W1[i] = 1.0 + std::exp(-eta1[i]);
  }
  return fit;
}

double quantile_linear(const VectorRef& values, double q) {
  if (values.size() == 0) {
    throw UsageError("quantile of an empty vector");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw UsageError("quantile level must lie in [0, 1]");
  }
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Eigen::VectorXd winsorize_weights(const VectorRef& W1, double lower, double upper_quantile) {
  check_positive(W1, "winsorize_weights");
  const double cap = quantile_linear(W1, upper_quantile);
  if (!(lower < cap)) {
    throw UsageError("winsorize_weights: lower bound " + std::to_string(lower) + " is not below the upper cap " +
                     std::to_string(cap));
  }
  return W1.array().max(lower).min(cap);
}

Eigen::VectorXd normalize_to_total(const VectorRef& W, double total) {
  check_positive(W, "normalize_to_total");
  if (!(total > 0.0)) {
    throw UsageError("normalize_to_total: total must be positive");
  }
  return W * (total / W.sum());
}

CalibrationResult calibrate_weights(const VectorRef& w, const MatrixRef& Z, const VectorRef& t,
                                    const std::optional<Eigen::VectorXd>& q, const CalibrationOptions& options) {
  const Eigen::Index n = w.size();
  const Eigen::Index p = Z.cols();
  if (Z.rows() != n || t.size() != p || (q && q->size() != n)) {
    throw UsageError("calibrate_weights: dimension mismatch");
  }
  const Eigen::VectorXd importance = q ? *q : Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd qw = importance.cwiseProduct(w);
  const Eigen::MatrixXd A = Z.transpose() * qw.asDiagonal() * Z;
  const Eigen::VectorXd b = 2.0 * (t - Z.transpose() * w);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  const Eigen::VectorXd D = ldlt.vectorD();
  const double dmax = D.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || (D.array() <= 1e-12 * dmax).any()) {
    throw NumericalError("calibrate_weights: calibration matrix is singular");
  }

  CalibrationResult result;
  result.lambda = ldlt.solve(b);
  result.w_tilde = w.array() * (1.0 + importance.array() * (Z * result.lambda).array() / 2.0);
  result.negative_count = static_cast<int>((result.w_tilde.array() < 0.0).count());

  if (result.negative_count > 0 && options.clamp_negative) {
    if (options.intercept_column < 0 || options.intercept_column >= p) {
      throw NumericalError("calibrate_weights: cannot restore the total without an intercept column");
    }
    const double target = t[options.intercept_column];
    if (!(target > 0.0)) {
      throw NumericalError("calibrate_weights: infeasible clamp, intercept total is not positive");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (result.w_tilde[j] < 0.0) {
        result.w_tilde[j] = 1.0;
      }
    }
    const double total = Z.col(options.intercept_column).dot(result.w_tilde);
    if (!(total > 0.0)) {
      throw NumericalError("calibrate_weights: infeasible clamp");
    }
    result.w_tilde *= target / total;
    result.clamped = true;
  }
  result.residual = Z.transpose() * result.w_tilde - t;
  return result;
}

NpsWeights estimate_nps_weights(const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2,
                                const NpsWeightOptions& options) {
  NpsWeights out;
  out.fit = estimate_propensity(Z1, Z2, W2, options.propensity);
  out.raw = out.fit.W1;
  out.winsorized = options.winsorize ? winsorize_weights(out.raw, options.lower, options.upper_quantile) : out.raw;
  out.calibrated = options.normalize ? normalize_to_total(out.winsorized, W2.sum()) : out.winsorized;
  if (options.totals) {
    out.calibration = calibrate_weights(out.calibrated, Z1, *options.totals, std::nullopt, options.calibration);
    out.calibrated = out.calibration->w_tilde;
  }
  return out;
}

}  // namespace survint
