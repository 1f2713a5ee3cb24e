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

#include "survint/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

#include "survint/csv.hpp"
#include "survint/error.hpp"
#include "survint/parallel.hpp"
#include "survint/pipeline.hpp"

namespace survint {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

std::uint64_t rho_key(double rho) { return static_cast<std::uint64_t>(std::llround(rho * 1e6)); }

}  // namespace

double population_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

FinitePopulation generate_population(const PopulationSpec& spec) {
  if (!(spec.rho > 0.0 && spec.rho <= 1.0)) {
    throw UsageError("rho must lie in (0, 1]");
  }
  if (spec.N == 0 || spec.n1 == 0 || spec.n2 == 0 || spec.n1 + spec.n2 > spec.N) {
    throw UsageError("population sizes must satisfy n1 + n2 <= N");
  }
  const auto N = static_cast<Eigen::Index>(spec.N);
  const auto& beta = spec.beta;
  FinitePopulation pop;
  pop.X.resize(N, 4);
  Eigen::VectorXd e(N);
  const std::uint64_t id = substream(stream_tag("population"), rho_key(spec.rho));
  for (Eigen::Index i = 0; i < N; ++i) {
    UniformBlock block = RngStream(spec.seed, id, static_cast<std::uint64_t>(i)).next_block();
    const double x1 = 20.0 + 70.0 * block.uniform();
    const double b2 = std::pow(beta[0] + beta[1] * x1, 0.1);
    const double x2 = block.uniform() <= logistic(b2) ? 1.0 : 0.0;
    const double b3 = std::pow(beta[0] + beta[1] * x1 + beta[2] * x2, 0.1);
    const double x3 = block.uniform() <= logistic(b3) ? 1.0 : 0.0;
    pop.X.row(i) << 1.0, x1, x2, x3;
    e[i] = block.normal();
  }
  const double b3 = spec.omit_x3_in_response ? 0.0 : beta[3];
  pop.m = beta[0] + beta[1] * pop.X.col(1).array() + beta[2] * pop.X.col(2).array() + b3 * pop.X.col(3).array();

  // Scale s of the errors so that Cor(m, m + s e) = rho over the realized population.
  double s = 0.0;
  if (spec.rho < 1.0) {
    const Eigen::ArrayXd dm = pop.m.array() - pop.m.mean();
    const Eigen::ArrayXd de = e.array() - e.mean();
    const double vm = dm.square().mean();
    const double ve = de.square().mean();
    const double c = (dm * de).mean();
    const double r2 = spec.rho * spec.rho;
    const double qa = c * c - r2 * vm * ve;
    const double qb = 2.0 * vm * c * (1.0 - r2);
    const double qc = vm * vm * (1.0 - r2);
    const double disc = qb * qb - 4.0 * qa * qc;
    if (!(qa < 0.0) || !(disc >= 0.0)) {
      throw NumericalError("cannot reach the requested correlation");
    }
    s = (-qb - std::sqrt(disc)) / (2.0 * qa);
    if (!(s > 0.0) || !(vm + s * c > 0.0)) {
      throw NumericalError("cannot reach the requested correlation");
    }
  }
  pop.sigma2 = s * s;
  pop.y = pop.m + s * e;
  pop.true_mean = pop.y.mean();
  pop.correlation = spec.rho < 1.0 ? population_correlation(pop.m, pop.y) : 1.0;
  if (std::abs(pop.correlation - spec.rho) > 0.005) {
    throw NumericalError("realized correlation " + std::to_string(pop.correlation) + " misses rho = " +
                         std::to_string(spec.rho));
  }

  const Eigen::MatrixXd slopes = pop.X.rightCols(3);
  const Eigen::Vector3d gamma(spec.participation[0], spec.participation[1], spec.participation[2]);
  const Eigen::VectorXd offset = slopes * gamma;
  pop.theta0 = calibrate_theta0(offset, static_cast<double>(spec.n1));
  pop.pi1 = (pop.theta0 + offset.array()).unaryExpr([](double v) { return logistic(v); });

  const Eigen::Vector3d delta(spec.size[0], spec.size[1], spec.size[2]);
  const Eigen::VectorXd size_b = slopes * delta;
  pop.theta1 = calibrate_theta1(size_b, spec.size_ratio);
  const Eigen::ArrayXd z = pop.theta1 + size_b.array();
  pop.pi2 = static_cast<double>(spec.n2) * z / z.sum();
  if (pop.pi2.maxCoeff() >= 1.0) {
    throw NumericalError("ps inclusion probabilities reach 1; lower n2 or the size ratio");
  }
  return pop;
}

double calibrate_theta0(const Eigen::VectorXd& offset, double n1) {
  auto excess = [&](double t) {
    CompensatedSum sum;
    for (Eigen::Index i = 0; i < offset.size(); ++i) {
      sum.add(logistic(t + offset[i]));
    }
    return sum.value() - n1;
  };
  double lo = -100.0;
  double hi = 100.0;
  const double flo = excess(lo);
  const double fhi = excess(hi);
  if (!(flo <= 0.0 && fhi >= 0.0)) {
    throw NumericalError("theta0 bracket not found in [-100, 100]");
  }
  for (int iter = 0; iter < 300; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    const double f = excess(mid);
    if (std::abs(f) <= 1e-6) {
      return mid;
    }
    if (f < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double mid = 0.5 * (lo + hi);
  if (std::abs(excess(mid)) > 1e-6) {
    throw NumericalError("theta0 bisection did not reach the 1e-6 tolerance");
  }
  return mid;
}

double calibrate_theta1(const Eigen::VectorXd& b, double ratio) {
  if (!(ratio > 1.0)) {
    throw UsageError("size ratio must exceed 1");
  }
  if (b.size() == 0) {
    throw UsageError("empty size measure");
  }
  const double theta1 = (b.maxCoeff() - ratio * b.minCoeff()) / (ratio - 1.0);
  if (!(theta1 + b.minCoeff() > 0.0)) {
    throw NumericalError("size measure is not positive after calibration");
  }
  return theta1;
}

std::vector<Eigen::Index> poisson_sample(const Eigen::VectorXd& pi, RngStream& stream) {
  UniformBlock block = stream.next_block();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (block.uniform() < pi[i]) {
      rows.push_back(i);
    }
  }
  return rows;
}

std::vector<Eigen::Index> systematic_pps(const Eigen::VectorXd& pi, std::size_t n, RngStream& stream,
                                         bool randomized) {
  const Eigen::Index N = pi.size();
  if (n == 0 || static_cast<Eigen::Index>(n) > N) {
    throw UsageError("systematic sample size must lie in [1, N]");
  }
  if (pi.maxCoeff() >= 1.0 || pi.minCoeff() < 0.0) {
    throw UsageError("systematic PPS needs inclusion probabilities in [0, 1)");
  }
  const double total = pi.sum();
  if (std::abs(total - static_cast<double>(n)) > 1e-6 * static_cast<double>(n)) {
    throw UsageError("inclusion probabilities must sum to the sample size");
  }
  UniformBlock block = stream.next_block();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (randomized) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(block.uniform() * static_cast<double>(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
  }
  const double start = block.uniform();
  const double scale = static_cast<double>(n) / total;
  std::vector<Eigen::Index> rows;
  rows.reserve(n);
  double cumulative = 0.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < order.size() && next < n; ++k) {
    cumulative += scale * pi[order[k]];
    while (next < n && start + static_cast<double>(next) < cumulative) {
      rows.push_back(order[k]);
      ++next;
    }
  }
  while (rows.size() < n) {
    rows.push_back(order.back());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

Misspecification parse_misspecification(const std::string& text) {
  if (text == "none") {
    return Misspecification::none;
  }
  if (text == "drop-x3-popmodel") {
    return Misspecification::drop_x3_popmodel;
  }
  if (text == "drop-x3-both") {
    return Misspecification::drop_x3_both;
  }
  throw UsageError("unknown misspecification '" + text + "' (expected none, drop-x3-popmodel or drop-x3-both)");
}

const char* to_string(Misspecification m) {
  switch (m) {
    case Misspecification::none:
      return "none";
    case Misspecification::drop_x3_popmodel:
      return "drop-x3-popmodel";
    case Misspecification::drop_x3_both:
      return "drop-x3-both";
  }
  return "none";
}

StudyResult run_study(const StudySpec& spec) {
  if (spec.replications == 0 || spec.scenarios.empty() || spec.rho_list.empty()) {
    throw UsageError("study needs replications, scenarios and at least one rho");
  }
  bool any_nps = false;
  for (Scenario s : spec.scenarios) {
    any_nps = any_nps || needs_nps_weights(s);
  }
  NpsWeightOptions weight_options;
  if (!spec.postprocess_weights) {
    weight_options.winsorize = false;
    weight_options.normalize = false;
  }
  const bool drop_x3 = spec.misspec != Misspecification::none;
  const std::vector<Eigen::Index> study_cols =
      drop_x3 ? std::vector<Eigen::Index>{0, 1, 2} : std::vector<Eigen::Index>{0, 1, 2, 3};
  std::vector<std::string> names{kInterceptName, "x1", "x2"};
  if (!drop_x3) {
    names.emplace_back("x3");
  }
  const std::size_t S = spec.scenarios.size();

  StudyResult result;
  for (double rho : spec.rho_list) {
    PopulationSpec ps = spec.population;
    ps.rho = rho;
    ps.seed = spec.seed;
    ps.omit_x3_in_response = spec.misspec == Misspecification::drop_x3_both;
    const FinitePopulation pop = generate_population(ps);
    const double T = pop.true_mean;
    const std::uint64_t rho_id = substream(stream_tag("replication"), rho_key(rho));
    const std::uint64_t rho_seed = substream(spec.seed, rho_key(rho));

    std::vector<std::optional<std::vector<ReplicationRecord>>> reps(spec.replications);
    parallel_for(spec.replications, spec.threads, [&](std::size_t r) {
      RngStream stream(spec.seed, substream(rho_id, r));
      const auto rows1 = poisson_sample(pop.pi1, stream);
      const auto rows2 = systematic_pps(pop.pi2, ps.n2, stream, spec.randomized_systematic);
      TwoSampleData data;
      data.Z1 = pop.X(rows1, Eigen::all);
      data.X1 = pop.X(rows1, study_cols);
      data.y1 = pop.y(rows1);
      data.Z2 = pop.X(rows2, Eigen::all);
      data.X2 = pop.X(rows2, study_cols);
      data.y2 = pop.y(rows2);
      data.W2 = pop.pi2(rows2).cwiseInverse();
      data.names = names;
      const std::uint64_t rep_seed = substream(rho_seed, r);
      try {
        PreparedSamples prepared = prepare_samples(data, weight_options, any_nps);
        if (spec.known_population_facts) {
          prepared.facts.N_hat = static_cast<double>(pop.X.rows());
          prepared.facts.xbar_hat = pop.X(Eigen::all, study_cols).colwise().mean().transpose();
          prepared.facts.source = FactsSource::external;
        }
        std::vector<ReplicationRecord> out;
        for (std::size_t k = 0; k < S; ++k) {
          ScenarioSpec sspec;
          sspec.kind = spec.scenarios[k];
          sspec.grid_size = spec.grid_size;
          sspec.draws = spec.draws;
          sspec.seed = substream(rep_seed, 2 * k);
          sspec.threads = 1;
          const ScenarioFit fit = fit_and_predict(prepared, sspec, substream(rep_seed, 2 * k + 1));
          ReplicationRecord rec;
          rec.rho = rho;
          rec.replication = r;
          rec.scenario = sspec.kind;
          rec.truth = T;
          rec.pm = fit.mean.summary.pm;
          rec.psd = fit.mean.summary.psd;
          rec.hpd = fit.mean.summary.hpd;
          rec.covered = rec.hpd.contains(T);
          rec.a_mean = fit.post.a_posterior_mean;
          const Eigen::ArrayXd centred = fit.post.a_grid.array() - rec.a_mean;
          rec.a_sd = std::sqrt((fit.post.a_mass.array() * centred.square()).sum());
          rec.n1 = rows1.size();
          rec.n2 = rows2.size();
          out.push_back(rec);
        }
        reps[r] = std::move(out);
      } catch (const NumericalError&) {
        reps[r].reset();
      }
    });

    PopulationInfo info{rho, pop.theta0, pop.theta1, pop.sigma2, pop.correlation, T, 0};
    for (const auto& rep : reps) {
      if (!rep) {
        ++info.failures;
      }
    }
    if (static_cast<double>(info.failures) > spec.max_failure_fraction * static_cast<double>(spec.replications)) {
      throw NumericalError("simulation: " + std::to_string(info.failures) + " of " +
                           std::to_string(spec.replications) + " replications failed at rho = " + format_double(rho));
    }
    result.populations.push_back(info);
    for (std::size_t k = 0; k < S; ++k) {
      CompensatedSum arb, prmse, cov, wid, am, asd;
      std::size_t count = 0;
      for (const auto& rep : reps) {
        if (!rep) {
          continue;
        }
        const ReplicationRecord& rec = (*rep)[k];
        arb.add(std::abs((rec.pm - T) / T));
        prmse.add(std::sqrt((rec.pm - T) * (rec.pm - T) + rec.psd * rec.psd));
        cov.add(rec.covered ? 1.0 : 0.0);
        wid.add(rec.hpd.width());
        am.add(rec.a_mean);
        asd.add(rec.a_sd);
        ++count;
      }
      const double c = static_cast<double>(count);
      result.rows.push_back(MetricsRow{spec.scenarios[k], rho, arb.value() / c, prmse.value() / c, cov.value() / c,
                                       wid.value() / c, am.value() / c, asd.value() / c, count});
    }
    for (auto& rep : reps) {
      if (rep) {
        for (auto& rec : *rep) {
          result.records.push_back(rec);
        }
      }
    }
  }
  return result;
}

void write_metrics_csv(std::ostream& out, const StudyResult& result, const std::vector<Scenario>& scenarios) {
  std::vector<std::string> header{"measure", "rho"};
  for (Scenario s : scenarios) {
    header.emplace_back(1, scenario_letter(s));
  }
  write_csv_row(out, header);
  const char* measures[] = {"ARB", "PRMSE", "Cov", "Wid"};
  for (int m = 0; m < 4; ++m) {
    for (const auto& info : result.populations) {
      std::vector<std::string> row{measures[m], format_double(info.rho)};
      for (Scenario s : scenarios) {
        std::string cell;
        for (const auto& r : result.rows) {
          if (r.scenario == s && r.rho == info.rho) {
            const double v = m == 0 ? r.arb : m == 1 ? r.prmse : m == 2 ? r.cov : r.wid;
            cell = format_double(v);
          }
        }
        row.push_back(cell);
      }
      write_csv_row(out, row);
    }
  }
}

void write_summary_csv(std::ostream& out, const StudyResult& result) {
  write_csv_row(out, {"scenario", "rho", "ARB", "PRMSE", "Cov", "Wid", "a_mean", "a_sd", "replications"});
  for (const auto& r : result.rows) {
    write_csv_row(out, {std::string(1, scenario_letter(r.scenario)), format_double(r.rho), format_double(r.arb),
                        format_double(r.prmse), format_double(r.cov), format_double(r.wid), format_double(r.a_mean),
                        format_double(r.a_sd), std::to_string(r.replications)});
  }
}

void write_replications_csv(std::ostream& out, const StudyResult& result) {
  write_csv_row(out, {"rho", "replication", "scenario", "T", "PM", "PSD", "C025", "C975", "I", "Wid", "a_mean",
                      "a_sd", "n1", "n2"});
  for (const auto& r : result.records) {
    write_csv_row(out, {format_double(r.rho), std::to_string(r.replication), std::string(1, scenario_letter(r.scenario)),
                        format_double(r.truth), format_double(r.pm), format_double(r.psd), format_double(r.hpd.lower),
                        format_double(r.hpd.upper), r.covered ? "1" : "0", format_double(r.hpd.width()),
                        format_double(r.a_mean), format_double(r.a_sd), std::to_string(r.n1), std::to_string(r.n2)});
  }
}

}  // namespace survint
