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

#include "survint/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "survint/csv.hpp"
#include "survint/error.hpp"
#include "survint/weights.hpp"

namespace survint {

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a_hex(buffer.str());
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
  std::vector<std::string> header{"a", "sigma2"};
  for (Eigen::Index j = 0; j < draws.beta.cols(); ++j) {
    header.push_back("beta_" + std::to_string(j + 1));
  }
  write_csv_row(out, header);
  std::vector<std::string> row(header.size());
  for (Eigen::Index m = 0; m < draws.beta.rows(); ++m) {
    row[0] = format_double(draws.a[m]);
    row[1] = format_double(draws.sigma2[m]);
    for (Eigen::Index j = 0; j < draws.beta.cols(); ++j) {
      row[static_cast<std::size_t>(j) + 2] = format_double(draws.beta(m, j));
    }
    write_csv_row(out, row);
  }
}

namespace {

double numeric_cell(const CsvTable& table, std::size_t row, std::size_t col, const std::string& source) {
  const auto v = parse_double(table.rows[row][col]);
  if (!v) {
    throw DataError(source + ": non-numeric cell at row " + std::to_string(row + 1) + ", column '" +
                    table.header[col] + "'");
  }
  return *v;
}

}  // namespace

PosteriorDraws read_draws_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::string source = path.string();
  const auto a_col = table.column("a");
  const auto s_col = table.column("sigma2");
  if (!a_col || !s_col) {
    throw DataError(source + ": missing column '" + std::string(a_col ? "sigma2" : "a") + "'");
  }
  std::vector<std::size_t> beta_cols;
  for (std::size_t j = 1;; ++j) {
    const auto c = table.column("beta_" + std::to_string(j));
    if (!c) {
      break;
    }
    beta_cols.push_back(*c);
  }
  if (beta_cols.empty()) {
    throw DataError(source + ": missing column 'beta_1'");
  }
  const auto M = static_cast<Eigen::Index>(table.rows.size());
  PosteriorDraws draws;
  draws.beta.resize(M, static_cast<Eigen::Index>(beta_cols.size()));
  draws.sigma2.resize(M);
  draws.a.resize(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto r = static_cast<std::size_t>(m);
    draws.a[m] = numeric_cell(table, r, *a_col, source);
    draws.sigma2[m] = numeric_cell(table, r, *s_col, source);
    for (std::size_t j = 0; j < beta_cols.size(); ++j) {
      draws.beta(m, static_cast<Eigen::Index>(j)) = numeric_cell(table, r, beta_cols[j], source);
    }
  }
  return draws;
}

Eigen::VectorXd read_csv_column(const std::filesystem::path& path, const std::string& name) {
  const CsvTable table = read_csv(path);
  const auto col = table.column(name);
  if (!col) {
    throw DataError(path.string() + ": missing column '" + name + "'");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out[static_cast<Eigen::Index>(r)] = numeric_cell(table, r, *col, path.string());
  }
  return out;
}

namespace {

nlohmann::json summary_to_json(const Summary& s) {
  return {{"PM", s.pm},   {"PSD", s.psd}, {"PCV", s.pcv}, {"NSE", s.nse}, {"HPD95", {s.hpd.lower, s.hpd.upper}},
          {"draws", s.draws}};
}

Summary summary_from_json(const nlohmann::json& j) {
  Summary s;
  s.pm = j.at("PM").get<double>();
  s.psd = j.at("PSD").get<double>();
  s.pcv = j.at("PCV").get<double>();
  s.nse = j.at("NSE").get<double>();
  const auto hpd = j.at("HPD95").get<std::vector<double>>();
  if (hpd.size() != 2) {
    throw DataError("HPD95 must have two entries");
  }
  s.hpd = {hpd[0], hpd[1]};
  s.draws = j.at("draws").get<std::size_t>();
  return s;
}

}  // namespace

nlohmann::json model_row_to_json(const ModelRow& row) {
  nlohmann::json j = summary_to_json(row.summary);
  j["model"] = row.model;
  if (row.discount) {
    j["a"] = summary_to_json(*row.discount);
  }
  return j;
}

ModelRow model_row_from_json(const nlohmann::json& j) {
  try {
    ModelRow row;
    row.model = j.at("model").get<std::string>();
    row.summary = summary_from_json(j);
    if (j.contains("a")) {
      row.discount = summary_from_json(j.at("a"));
    }
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed prediction record: ") + e.what());
  }
}

void write_model_table(std::ostream& out, const std::vector<ModelRow>& rows) {
  write_csv_row(out, {"Model", "PM", "PSD", "PCV", "CI_lower", "CI_upper"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.model, format_double(r.summary.pm), format_double(r.summary.psd),
                        format_double(r.summary.pcv), format_double(r.summary.hpd.lower),
                        format_double(r.summary.hpd.upper)});
  }
}

void sort_model_rows(std::vector<ModelRow>& rows) {
  auto rank = [](const std::string& m) {
    static const std::string order = "BCDEG";
    if (m.size() == 1) {
      const auto pos = order.find(m[0]);
      if (pos != std::string::npos) {
        return static_cast<int>(pos);
      }
    }
    return 100;
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ModelRow& a, const ModelRow& b) {
    const int ra = rank(a.model);
    const int rb = rank(b.model);
    return ra != rb ? ra < rb : a.model < b.model;
  });
}

std::string discount_note(const std::vector<ModelRow>& rows) {
  std::ostringstream note;
  bool first = true;
  for (const auto& r : rows) {
    if (!r.discount) {
      continue;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %.3f (95%% HPD %.3f, %.3f)", r.model.c_str(), r.discount->pm,
                  r.discount->hpd.lower, r.discount->hpd.upper);
    note << (first ? "Discount factor a: " : "; ") << buf;
    first = false;
  }
  return note.str();
}

DensityCurve kernel_density(const Eigen::VectorXd& draws, std::size_t points) {
  const auto n = static_cast<double>(draws.size());
  if (draws.size() < 2 || points < 2) {
    throw UsageError("kernel density needs at least two draws and two grid points");
  }
  const double mean = draws.mean();
  const double sd = std::sqrt((draws.array() - mean).square().sum() / (n - 1.0));
  const double iqr = quantile_linear(draws, 0.75) - quantile_linear(draws, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) {
    spread = sd > 0.0 ? sd : std::max(std::abs(mean), 1.0) * 1e-6;
  }
  DensityCurve curve;
  curve.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  const double h = curve.bandwidth;
  const double lo = draws.minCoeff() - 4.0 * h;
  const double hi = draws.maxCoeff() + 4.0 * h;
  curve.grid = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(points), lo, hi);
  curve.density.resize(curve.grid.size());
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index k = 0; k < curve.grid.size(); ++k) {
    curve.density[k] = norm * (-0.5 * ((curve.grid[k] - draws.array()) / h).square()).exp().sum();
  }
  return curve;
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) {
    throw UsageError("trapezoid: size mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    total += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  }
  return total;
}

}  // namespace survint
