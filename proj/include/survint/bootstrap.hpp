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

#ifndef SURVINT_BOOTSTRAP_HPP
#define SURVINT_BOOTSTRAP_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "survint/pipeline.hpp"

namespace survint {

enum class ResampleMode {
  /// Rows drawn uniformly with replacement.
  with_replacement,
  /// Rows drawn with replacement using flat-Dirichlet row probabilities.
  dirichlet_weights,
};

ResampleMode parse_resample_mode(const std::string& text);
const char* to_string(ResampleMode mode);

struct BootstrapSpec {
  std::size_t replicates = 1000;
  ResampleMode mode = ResampleMode::with_replacement;
  /// Posterior draws of the population mean per replicate.
  std::size_t inner_draws = 100;
  /// Draws for the reference fit on the original samples.
  std::size_t reference_draws = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Largest tolerated fraction of dropped replicates.
  double max_drop_fraction = 0.05;
};

struct ReplicateSummary {
  std::size_t index = 0;
  double pm = 0.0;
  double psd = 0.0;
  double N_hat = 0.0;
  double a_mean = 1.0;
};

struct BootstrapPosterior {
  /// Population-mean draws of all retained replicates, in replicate order.
  Eigen::VectorXd pooled;
  std::vector<ReplicateSummary> replicates;
  std::size_t dropped = 0;
  /// Summaries without and with the bootstrap.
  Summary without;
  Summary with;
};

/// Resample both samples, re-estimate the nps weights and the population facts,
/// refit, and pool the population-mean draws. A replicate whose fit fails
/// numerically is dropped; more than max_drop_fraction drops aborts.
BootstrapPosterior bootstrap_pipeline(const TwoSampleData& data, const ScenarioSpec& scenario,
                                      const NpsWeightOptions& weight_options, const BootstrapSpec& spec);

/// Summary by order statistics T(ceil(0.025 B)) and T(ceil(0.975 B)).
struct OrderSummary {
  double pm = 0.0;
  double psd = 0.0;
  Interval interval;
};

OrderSummary order_summary(const Eigen::VectorXd& values);

struct PreliminaryBootstrap {
  Eigen::VectorXd N;
  /// One row per replicate.
  Eigen::MatrixXd xbar;
  Eigen::VectorXd ybar;
  OrderSummary N_summary;
  std::vector<OrderSummary> xbar_summary;
  OrderSummary ybar_summary;
};

/// Bayesian bootstrap of the ps: replicate b reweights unit i by n2 g_i with
/// g ~ Dirichlet(1, ..., 1) and recomputes the weighted estimators.
PreliminaryBootstrap preliminary_ps_bootstrap(const Eigen::MatrixXd& X2, const Eigen::VectorXd& y2,
                                              const Eigen::VectorXd& W2, std::size_t replicates = 10000,
                                              std::uint64_t seed = 1);

}  // namespace survint

#endif
