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

#include "survint/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <fstream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "survint/csv.hpp"
#include "survint/error.hpp"

namespace survint {

const char* to_string(SampleRole role) { return role == SampleRole::nps ? "nps" : "ps"; }

Eigen::Index SurveySample::column_index(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw DataError("unknown covariate column '" + name + "'");
  }
  return static_cast<Eigen::Index>(it - names.begin());
}

Eigen::MatrixXd SurveySample::columns(const std::vector<std::string>& cols) const {
  Eigen::MatrixXd out(n(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = X.col(column_index(cols[j]));
  }
  return out;
}

SurveySample SurveySample::select(const std::vector<std::string>& cols) const {
  SurveySample out;
  out.role = role;
  out.names = cols;
  out.X = columns(cols);
  out.y = y;
  out.W = W;
  return out;
}

SurveySample SurveySample::take_rows(const std::vector<Eigen::Index>& rows) const {
  SurveySample out;
  out.role = role;
  out.names = names;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.X.resize(m, p());
  out.y.resize(m);
  if (W) {
    out.W = Eigen::VectorXd(m);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    out.X.row(i) = X.row(r);
    out.y[i] = y[r];
    if (W) {
      (*out.W)[i] = (*W)[r];
    }
  }
  return out;
}

void validate_sample(const SurveySample& sample) {
  if (sample.y.size() != sample.n() || static_cast<Eigen::Index>(sample.names.size()) != sample.p()) {
    throw DataError("sample dimensions are inconsistent");
  }
  if (sample.role == SampleRole::ps && !sample.W) {
    throw DataError("missing design weights for ps");
  }
  if (sample.n() < sample.p()) {
    throw DataError("n < p: " + std::to_string(sample.n()) + " rows for " + std::to_string(sample.p()) + " columns");
  }
  if (!sample.X.allFinite() || !sample.y.allFinite()) {
    throw DataError("sample contains non-finite cells");
  }
  if (sample.W) {
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
      if (!((*sample.W)[i] > 0.0) || !std::isfinite((*sample.W)[i])) {
        throw DataError("nonpositive weight at row " + std::to_string(i + 1));
      }
    }
  }
  if (sample.has_intercept() && (sample.X.col(0).array() != 1.0).any()) {
    throw DataError("intercept column is not all ones");
  }
}

SurveySample parse_sample(std::istream& in, const SampleSchema& schema, SampleRole role, const std::string& source) {
  const CsvTable table = parse_csv(in);
  auto require = [&](const std::string& name) {
    const auto idx = table.column(name);
    if (!idx) {
      throw DataError(source + ": missing column '" + name + "'");
    }
    return *idx;
  };

  if (role == SampleRole::ps && !schema.weight) {
    throw DataError(source + ": missing design weights for ps");
  }
  std::optional<std::size_t> weight_col;
  if (schema.weight) {
    weight_col = table.column(*schema.weight);
    if (!weight_col) {
      if (role == SampleRole::ps) {
        throw DataError(source + ": missing design weights for ps (column '" + *schema.weight + "')");
      }
      throw DataError(source + ": missing column '" + *schema.weight + "'");
    }
  }
  const std::size_t response_col = require(schema.response);
  std::vector<std::size_t> covariate_cols;
  for (const auto& name : schema.covariates) {
    covariate_cols.push_back(require(name));
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const Eigen::Index offset = schema.add_intercept ? 1 : 0;
  const Eigen::Index p = offset + static_cast<Eigen::Index>(covariate_cols.size());

  SurveySample sample;
  sample.role = role;
  if (schema.add_intercept) {
    sample.names.emplace_back(kInterceptName);
  }
  sample.names.insert(sample.names.end(), schema.covariates.begin(), schema.covariates.end());
  sample.X.resize(n, p);
  sample.y.resize(n);
  if (weight_col) {
    sample.W = Eigen::VectorXd(n);
  }

  auto cell = [&](Eigen::Index row, std::size_t col) {
    const auto value = parse_double(table.rows[static_cast<std::size_t>(row)][col]);
    if (!value || !std::isfinite(*value)) {
      throw DataError(source + ": non-numeric cell at row " + std::to_string(row + 1) + ", column '" +
                      table.header[col] + "'");
    }
    return *value;
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    if (schema.add_intercept) {
      sample.X(i, 0) = 1.0;
    }
    for (std::size_t j = 0; j < covariate_cols.size(); ++j) {
      sample.X(i, offset + static_cast<Eigen::Index>(j)) = cell(i, covariate_cols[j]);
    }
    sample.y[i] = cell(i, response_col);
    if (schema.binary_response && sample.y[i] != 0.0 && sample.y[i] != 1.0) {
      throw DataError(source + ": response at row " + std::to_string(i + 1) + " is not 0/1");
    }
    if (weight_col) {
      const double w = cell(i, *weight_col);
      if (!(w > 0.0)) {
        throw DataError(source + ": nonpositive weight at row " + std::to_string(i + 1) + ", column '" +
                        *schema.weight + "'");
      }
      (*sample.W)[i] = w;
    }
  }
  if (n < p) {
    throw DataError(source + ": n < p (" + std::to_string(n) + " rows, " + std::to_string(p) + " columns)");
  }
  validate_sample(sample);
  return sample;
}

SurveySample load_sample(const std::filesystem::path& path, const SampleSchema& schema, SampleRole role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  return parse_sample(in, schema, role, path.string());
}

void write_sample(std::ostream& out, const SurveySample& sample, const std::string& response_name,
                  const std::string& weight_name) {
  std::vector<std::string> header{response_name};
  if (sample.W) {
    header.push_back(weight_name);
  }
  const Eigen::Index first = sample.has_intercept() ? 1 : 0;
  for (Eigen::Index j = first; j < sample.p(); ++j) {
    header.push_back(sample.names[static_cast<std::size_t>(j)]);
  }
  write_csv_row(out, header);
  std::vector<std::string> cells;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    cells.clear();
    cells.push_back(format_double(sample.y[i]));
    if (sample.W) {
      cells.push_back(format_double((*sample.W)[i]));
    }
    for (Eigen::Index j = first; j < sample.p(); ++j) {
      cells.push_back(format_double(sample.X(i, j)));
    }
    write_csv_row(out, cells);
  }
}

void validate_covariate_sets(const CovariateSets& sets, const std::string& response) {
  const std::set<std::string> z(sets.participation.begin(), sets.participation.end());
  if (z.count(response) != 0) {
    throw DataError("response column '" + response + "' may not enter the participation model");
  }
  for (const auto& x : sets.study) {
    if (z.count(x) == 0) {
      throw DataError("study covariate '" + x + "' is not among the participation covariates");
    }
  }
}

PopulationFacts population_facts_from_ps(const SurveySample& ps) {
  if (!ps.W) {
    throw DataError("missing design weights for ps");
  }
  const Eigen::VectorXd& W = *ps.W;
  PopulationFacts facts;
  facts.N_hat = W.sum();
  facts.xbar_hat = (ps.X.transpose() * W) / facts.N_hat;
  if (ps.has_intercept()) {
    facts.xbar_hat[0] = 1.0;
  }
  facts.names = ps.names;
  facts.source = FactsSource::ps_ipw;
  return facts;
}

nlohmann::json facts_to_json(const PopulationFacts& facts) {
  nlohmann::json j;
  j["N_hat"] = facts.N_hat;
  j["xbar_hat"] = std::vector<double>(facts.xbar_hat.data(), facts.xbar_hat.data() + facts.xbar_hat.size());
  j["names"] = facts.names;
  j["source"] = facts.source == FactsSource::ps_ipw ? "ps_ipw" : "external";
  return j;
}

PopulationFacts facts_from_json(const nlohmann::json& j) {
  PopulationFacts facts;
  try {
    facts.N_hat = j.at("N_hat").get<double>();
    const auto xbar = j.at("xbar_hat").get<std::vector<double>>();
    facts.xbar_hat = Eigen::Map<const Eigen::VectorXd>(xbar.data(), static_cast<Eigen::Index>(xbar.size()));
    if (j.contains("names")) {
      facts.names = j.at("names").get<std::vector<std::string>>();
    }
    facts.source = j.value("source", std::string("external")) == "ps_ipw" ? FactsSource::ps_ipw
                                                                           : FactsSource::external;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("population facts: ") + e.what());
  }
  if (!(facts.N_hat > 0.0)) {
    throw DataError("population facts: N_hat must be positive");
  }
  return facts;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> standardize_jointly(SurveySample& a, SurveySample& b) {
  if (a.names != b.names) {
    throw DataError("standardize: samples have different columns");
  }
  const Eigen::Index p = a.p();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sd = Eigen::VectorXd::Ones(p);
  const double total = static_cast<double>(a.n() + b.n());
  for (Eigen::Index j = 0; j < p; ++j) {
    if (a.names[static_cast<std::size_t>(j)] == kInterceptName) {
      continue;
    }
    const double m = (a.X.col(j).sum() + b.X.col(j).sum()) / total;
    const double ss =
        (a.X.col(j).array() - m).square().sum() + (b.X.col(j).array() - m).square().sum();
    const double s = std::sqrt(ss / (total - 1.0));
    if (!(s > 0.0)) {
      throw DataError("standardize: column '" + a.names[static_cast<std::size_t>(j)] + "' is constant");
    }
    mean[j] = m;
    sd[j] = s;
    a.X.col(j) = (a.X.col(j).array() - m) / s;
    b.X.col(j) = (b.X.col(j).array() - m) / s;
  }
  return {mean, sd};
}

}  // namespace survint
