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

#include "survint/pipeline.hpp"

#include "survint/error.hpp"

namespace survint {

void TwoSampleData::validate() const {
  const Eigen::Index n1 = y1.size();
  const Eigen::Index n2 = y2.size();
  if (X1.rows() != n1 || Z1.rows() != n1 || X2.rows() != n2 || Z2.rows() != n2 || W2.size() != n2) {
    throw UsageError("two-sample data: row counts do not match");
  }
  if (X1.cols() != X2.cols() || Z1.cols() != Z2.cols()) {
    throw UsageError("two-sample data: column counts do not match");
  }
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != X1.cols()) {
    throw UsageError("two-sample data: one name per study column is required");
  }
  if ((W2.array() <= 0.0).any()) {
    throw DataError("two-sample data: ps design weights must be positive");
  }
}

TwoSampleData TwoSampleData::take_rows(const std::vector<Eigen::Index>& rows1,
                                       const std::vector<Eigen::Index>& rows2) const {
  TwoSampleData out;
  out.X1 = X1(rows1, Eigen::all);
  out.Z1 = Z1(rows1, Eigen::all);
  out.y1 = y1(rows1);
  out.X2 = X2(rows2, Eigen::all);
  out.Z2 = Z2(rows2, Eigen::all);
  out.y2 = y2(rows2);
  out.W2 = W2(rows2);
  out.names = names;
  return out;
}

PopulationFacts facts_from_design(const Eigen::MatrixXd& X2, const Eigen::VectorXd& W2,
                                  const std::vector<std::string>& names) {
  PopulationFacts facts;
  facts.N_hat = W2.sum();
  if (!(facts.N_hat > 0.0)) {
    throw DataError("ps design weights sum to zero");
  }
  facts.xbar_hat = (X2.transpose() * W2) / facts.N_hat;
  for (Eigen::Index j = 0; j < X2.cols(); ++j) {
    if ((X2.col(j).array() == 1.0).all()) {
      facts.xbar_hat[j] = 1.0;
    }
  }
  facts.names = names;
  facts.source = FactsSource::ps_ipw;
  return facts;
}

bool needs_nps_weights(Scenario kind) { return kind == Scenario::B || kind == Scenario::C || kind == Scenario::D; }

PreparedSamples prepare_samples(const TwoSampleData& data, const NpsWeightOptions& options, bool estimate_nps) {
  data.validate();
  PreparedSamples out;
  out.facts = facts_from_design(data.X2, data.W2, data.names);
  out.ps = with_adjusted_weights(data.X2, data.y2, data.W2);
  if (estimate_nps) {
    out.weights = estimate_nps_weights(data.Z1, data.Z2, data.W2, options);
    out.nps = with_adjusted_weights(data.X1, data.y1, out.weights->calibrated);
  } else {
    out.nps = with_unit_weights(data.X1, data.y1);
  }
  return out;
}

ScenarioFit fit_and_predict(const PreparedSamples& samples, const ScenarioSpec& spec, std::uint64_t predict_seed) {
  if (needs_nps_weights(spec.kind) && !samples.weights) {
    throw UsageError(std::string("scenario ") + scenario_letter(spec.kind) + " needs estimated nps weights");
  }
  ScenarioFit fit;
  fit.post = fit_scenario(samples.nps, samples.ps, spec);
  fit.mean = surrogate_mean_draws(fit.post, samples.facts, predict_seed, spec.threads);
  return fit;
}

}  // namespace survint
