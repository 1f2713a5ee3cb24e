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

#ifndef SURVINT_PIPELINE_HPP
#define SURVINT_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "survint/dataset.hpp"
#include "survint/posterior.hpp"
#include "survint/prediction.hpp"
#include "survint/weights.hpp"

namespace survint {

/// The two samples as used by the estimation pipeline: study design X,
/// participation design Z, responses, and the ps design weights.
struct TwoSampleData {
  Eigen::MatrixXd X1;
  Eigen::MatrixXd Z1;
  Eigen::VectorXd y1;
  Eigen::MatrixXd X2;
  Eigen::MatrixXd Z2;
  Eigen::VectorXd y2;
  Eigen::VectorXd W2;
  /// Column names of X (intercept first when present).
  std::vector<std::string> names;

  void validate() const;
  [[nodiscard]] TwoSampleData take_rows(const std::vector<Eigen::Index>& rows1,
                                        const std::vector<Eigen::Index>& rows2) const;
};

/// N_hat = sum W2 and xbar_hat = sum W2 x2 / N_hat; an all-ones column gets exactly 1.
PopulationFacts facts_from_design(const Eigen::MatrixXd& X2, const Eigen::VectorXd& W2,
                                  const std::vector<std::string>& names);

/// True for scenarios that use the nps (B, C, D).
bool needs_nps_weights(Scenario kind);

struct PreparedSamples {
  WeightedSample nps;
  WeightedSample ps;
  PopulationFacts facts;
  std::optional<NpsWeights> weights;
};

/// Adjusted-weight samples and population facts. The nps weights are estimated only
/// when `estimate_nps` is set; otherwise the nps carries unit weights.
PreparedSamples prepare_samples(const TwoSampleData& data, const NpsWeightOptions& options, bool estimate_nps);

struct ScenarioFit {
  PosteriorDraws post;
  MeanPosterior mean;
};

/// Posterior draws for spec.kind followed by surrogate draws of the population mean.
ScenarioFit fit_and_predict(const PreparedSamples& samples, const ScenarioSpec& spec, std::uint64_t predict_seed);

}  // namespace survint

#endif
