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

#ifndef SURVINT_REPORT_HPP
#define SURVINT_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "survint/posterior.hpp"
#include "survint/prediction.hpp"

namespace survint {

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

/// Header a,sigma2,beta_1..beta_p.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);
/// Reads the layout written by write_draws_csv (beta, sigma2 and a only).
PosteriorDraws read_draws_csv(const std::filesystem::path& path);

/// Column `name` of a numeric CSV file.
Eigen::VectorXd read_csv_column(const std::filesystem::path& path, const std::string& name);

/// One row of the model comparison table.
struct ModelRow {
  std::string model;
  Summary summary;
  /// Posterior summary of the discount factor, for the scenarios that have one.
  std::optional<Summary> discount;
};

nlohmann::json model_row_to_json(const ModelRow& row);
ModelRow model_row_from_json(const nlohmann::json& j);

/// Model,PM,PSD,PCV,CI_lower,CI_upper
void write_model_table(std::ostream& out, const std::vector<ModelRow>& rows);

/// Scenario letters first in the order B, C, D, E, G, then other names alphabetically.
void sort_model_rows(std::vector<ModelRow>& rows);

/// "Discount factor a: C 0.57 (95% HPD 0.48, 0.66); D ..."; empty when no row has one.
std::string discount_note(const std::vector<ModelRow>& rows);

struct DensityCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
};

/// Gaussian kernel density with Silverman's bandwidth on an even grid that
/// extends four bandwidths beyond the data.
DensityCurve kernel_density(const Eigen::VectorXd& draws, std::size_t points = 512);

/// Trapezoid rule.
double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace survint

#endif
