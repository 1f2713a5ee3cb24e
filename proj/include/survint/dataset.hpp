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

#ifndef SURVINT_DATASET_HPP
#define SURVINT_DATASET_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace survint {

/// Column name used for the auto-prepended intercept.
inline constexpr const char* kInterceptName = "(Intercept)";

enum class SampleRole { nps, ps };

const char* to_string(SampleRole role);

/// Binds CSV columns to roles. Columns are matched by header name, never by position.
struct SampleSchema {
  std::string response;
  /// Every covariate column needed downstream (participation and study sets).
  std::vector<std::string> covariates;
  /// Design-weight column: required for ps, optional (pre-estimated) for nps.
  std::optional<std::string> weight;
  bool add_intercept = true;
  /// Require y in {0, 1}.
  bool binary_response = false;
};

/// One sample's rows.
struct SurveySample {
  SampleRole role = SampleRole::ps;
  /// Column names of X; the intercept, when present, comes first.
  std::vector<std::string> names;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> W;

  [[nodiscard]] Eigen::Index n() const { return X.rows(); }
  [[nodiscard]] Eigen::Index p() const { return X.cols(); }
  [[nodiscard]] bool has_intercept() const { return !names.empty() && names.front() == kInterceptName; }

  /// Index of a named column; throws DataError when absent.
  [[nodiscard]] Eigen::Index column_index(const std::string& name) const;

  /// Sub-matrix of the named columns, in the order given.
  [[nodiscard]] Eigen::MatrixXd columns(const std::vector<std::string>& cols) const;

  /// Copy restricted to the named columns (same rows).
  [[nodiscard]] SurveySample select(const std::vector<std::string>& cols) const;

  /// Copy made of the given rows (repeats allowed).
  [[nodiscard]] SurveySample take_rows(const std::vector<Eigen::Index>& rows) const;
};

/// Checks n >= p, finite cells, positive weights, intercept of ones and the role/weight pairing.
void validate_sample(const SurveySample& sample);

SurveySample parse_sample(std::istream& in, const SampleSchema& schema, SampleRole role,
                          const std::string& source = "<stream>");
SurveySample load_sample(const std::filesystem::path& path, const SampleSchema& schema, SampleRole role);

/// Writes response, optional weight and covariate columns (intercept omitted) at full precision.
void write_sample(std::ostream& out, const SurveySample& sample, const std::string& response_name = "y",
                  const std::string& weight_name = "weight");

/// Participation covariates z and study covariates x, by column name.
struct CovariateSets {
  std::vector<std::string> participation;
  std::vector<std::string> study;
};

/// x must be a subset of z, and the response may not enter z.
void validate_covariate_sets(const CovariateSets& sets, const std::string& response);

enum class FactsSource { ps_ipw, external };

/// Estimated population size and covariate means.
struct PopulationFacts {
  double N_hat = 0.0;
  Eigen::VectorXd xbar_hat;
  std::vector<std::string> names;
  FactsSource source = FactsSource::ps_ipw;
};

/// N_hat = sum W, xbar_hat = sum W x / sum W over the columns of `ps`.
PopulationFacts population_facts_from_ps(const SurveySample& ps);

nlohmann::json facts_to_json(const PopulationFacts& facts);
PopulationFacts facts_from_json(const nlohmann::json& j);

/// Centers and scales the non-intercept columns of both samples with pooled moments.
/// Returns (means, sds) per column; intercept entries are (0, 1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> standardize_jointly(SurveySample& a, SurveySample& b);

}  // namespace survint

#endif
