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

#ifndef SURVINT_WEIGHTS_HPP
#define SURVINT_WEIGHTS_HPP

#include <optional>

#include <Eigen/Dense>

/**
 * \file
 * \brief Effective sample sizes, adjusted weights, pseudo-likelihood propensity
 * scores for the non-probability sample, winsorization and linear calibration.
 */

namespace survint {

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

/// Original weights W, adjusted weights w and effective sample size n_o.
struct WeightSet {
  Eigen::VectorXd W;
  Eigen::VectorXd w;
  double n_o = 0.0;
};

/// (sum W)^2 / sum W^2. Throws DataError on empty input or nonpositive weights.
double effective_sample_size(const VectorRef& W);

/// w_i = n_o W_i / sum W, so that sum w = n_o and ratios are kept.
WeightSet adjust_weights(const VectorRef& W);

/// Logistic participation model fitted on the nps rows against ps-weighted population rows.
struct PropensityFit {
  Eigen::VectorXd theta;
  /// Fitted participation probabilities of the nps rows.
  Eigen::VectorXd pi;
  /// Raw nps weights 1 / pi.
  Eigen::VectorXd W1;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool used_fallback = false;
};

struct PropensityOptions {
  int max_iter = 100;
  /// Relative step tolerance for Newton and the fallback ascent.
  double tol = 1e-10;
  int max_halvings = 60;
  int fallback_iter = 20000;
};

/// sum_nps z'theta - sum_ps W2 log(1 + exp(z'theta)).
double clw_pseudo_loglik(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2);

/// sum_nps z - sum_ps W2 pi z, the exact derivative of clw_pseudo_loglik.
Eigen::VectorXd clw_gradient(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2);

/// Negative definite Hessian of the pseudo-log-likelihood.
Eigen::MatrixXd clw_hessian(const VectorRef& theta, const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2);

/// Damped Newton from theta = 0 with a backtracking gradient-ascent fallback.
/// Throws NumericalError on rank deficiency or when both methods fail.
PropensityFit estimate_propensity(const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2,
                                  const PropensityOptions& options = {});

/// Linear-interpolation (type 7) sample quantile.
double quantile_linear(const VectorRef& values, double q);

/// Clamps weights below `lower` up to `lower` and above the empirical upper quantile down to it.
Eigen::VectorXd winsorize_weights(const VectorRef& W1, double lower = 1.0, double upper_quantile = 0.99);

/// Rescales weights so they sum to `total`.
Eigen::VectorXd normalize_to_total(const VectorRef& W, double total);

struct CalibrationOptions {
  /// Reset negative calibrated weights to 1 and rescale to the intercept total.
  bool clamp_negative = true;
  /// Column of Z holding the intercept; negative when there is none.
  Eigen::Index intercept_column = 0;
};

struct CalibrationResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd w_tilde;
  /// sum w_tilde z - t.
  Eigen::VectorXd residual;
  int negative_count = 0;
  bool clamped = false;
};

/// Closed-form calibration under the Euclidean distance G(u) = (u - 1)^2.
/// `q` defaults to all ones.
CalibrationResult calibrate_weights(const VectorRef& w, const MatrixRef& Z, const VectorRef& t,
                                    const std::optional<Eigen::VectorXd>& q = std::nullopt,
                                    const CalibrationOptions& options = {});

/// Post-processing applied to the raw nps weights 1/pi.
struct NpsWeightOptions {
  bool winsorize = true;
  double lower = 1.0;
  double upper_quantile = 0.99;
  /// Rescale to the ps-estimated population size.
  bool normalize = true;
  /// Calibration totals for the participation covariates (optional).
  std::optional<Eigen::VectorXd> totals;
  CalibrationOptions calibration;
  PropensityOptions propensity;
};

struct NpsWeights {
  PropensityFit fit;
  Eigen::VectorXd raw;
  Eigen::VectorXd winsorized;
  /// Final weights after normalization and calibration.
  Eigen::VectorXd calibrated;
  std::optional<CalibrationResult> calibration;
};

/// Propensity fit, then winsorize, normalize to N_hat, and calibrate, in that order.
NpsWeights estimate_nps_weights(const MatrixRef& Z1, const MatrixRef& Z2, const VectorRef& W2,
                                const NpsWeightOptions& options = {});

}  // namespace survint

#endif
