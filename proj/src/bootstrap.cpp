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

#include "survint/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "survint/error.hpp"
#include "survint/parallel.hpp"
#include "survint/rng.hpp"

namespace survint {

ResampleMode parse_resample_mode(const std::string& text) {
  if (text == "with_replacement" || text == "replacement") {
    return ResampleMode::with_replacement;
  }
  if (text == "dirichlet_weights" || text == "dirichlet") {
    return ResampleMode::dirichlet_weights;
  }
  throw UsageError("unknown resample mode '" + text + "' (expected with_replacement or dirichlet_weights)");
}

const char* to_string(ResampleMode mode) {
  return mode == ResampleMode::with_replacement ? "with_replacement" : "dirichlet_weights";
}

namespace {

// Row order by content, so that replicate draws do not depend on input order.
std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& content) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(content.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < content.cols(); ++j) {
      if (content(a, j) != content(b, j)) {
        return content(a, j) < content(b, j);
      }
    }
    return false;
  });
  return order;
}

TwoSampleData canonicalize(const TwoSampleData& data) {
  Eigen::MatrixXd c1(data.y1.size(), 1 + data.X1.cols() + data.Z1.cols());
  c1 << data.y1, data.X1, data.Z1;
  Eigen::MatrixXd c2(data.y2.size(), 2 + data.X2.cols() + data.Z2.cols());
  c2 << data.y2, data.X2, data.Z2, data.W2;
  return data.take_rows(canonical_order(c1), canonical_order(c2));
}

std::vector<Eigen::Index> resample_rows(Eigen::Index n, ResampleMode mode, RngStream& stream) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  if (mode == ResampleMode::dirichlet_weights) {
    const Eigen::VectorXd g = draw_dirichlet_flat(static_cast<std::size_t>(n), stream);
    std::partial_sum(g.data(), g.data() + n, cumulative.begin());
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      cumulative[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
    }
  }
  UniformBlock block = stream.next_block();
  for (auto& row : rows) {
    row = static_cast<Eigen::Index>(lookup_cdf(cumulative, block.uniform()));
  }
  return rows;
}

double mean_of(const Eigen::VectorXd& v) { return v.size() > 0 ? v.mean() : 0.0; }

double sd_of(const Eigen::VectorXd& v) {
  if (v.size() < 2) {
    return 0.0;
  }
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

BootstrapPosterior bootstrap_pipeline(const TwoSampleData& data, const ScenarioSpec& scenario,
                                      const NpsWeightOptions& weight_options, const BootstrapSpec& spec) {
  data.validate();
  if (spec.replicates == 0 || spec.inner_draws == 0) {
    throw UsageError("bootstrap needs at least one replicate and one draw per replicate");
  }
  const TwoSampleData base = canonicalize(data);
  const bool need_weights = needs_nps_weights(scenario.kind);

  BootstrapPosterior out;
  {
    ScenarioSpec reference = scenario;
    reference.draws = spec.reference_draws;
    reference.seed = spec.seed;
    reference.threads = spec.threads;
    const PreparedSamples prepared = prepare_samples(base, weight_options, need_weights);
    out.without = fit_and_predict(prepared, reference, spec.seed).mean.summary;
  }

  struct Replicate {
    Eigen::VectorXd draws;
    ReplicateSummary summary;
  };
  std::vector<std::optional<Replicate>> results(spec.replicates);
  const std::uint64_t root = stream_tag("bootstrap");
  parallel_for(spec.replicates, spec.threads, [&](std::size_t r) {
    RngStream stream(spec.seed, substream(root, r));
    const auto rows1 = resample_rows(base.y1.size(), spec.mode, stream);
    const auto rows2 = resample_rows(base.y2.size(), spec.mode, stream);
    const TwoSampleData replicate = base.take_rows(rows1, rows2);
    ScenarioSpec s = scenario;
    s.draws = spec.inner_draws;
    s.seed = substream(spec.seed, 2 * r);
    s.threads = 1;
    try {
      const PreparedSamples prepared = prepare_samples(replicate, weight_options, need_weights);
      const ScenarioFit fit = fit_and_predict(prepared, s, substream(spec.seed, 2 * r + 1));
      Replicate rep;
      rep.draws = fit.mean.draws;
      rep.summary = {r, mean_of(rep.draws), sd_of(rep.draws), prepared.facts.N_hat, fit.post.a_posterior_mean};
      results[r] = std::move(rep);
    } catch (const NumericalError&) {
      results[r].reset();
    }
  });

  std::size_t kept = 0;
  for (const auto& r : results) {
    if (r) {
      ++kept;
    }
  }
  out.dropped = spec.replicates - kept;
  if (static_cast<double>(out.dropped) > spec.max_drop_fraction * static_cast<double>(spec.replicates)) {
    throw NumericalError("bootstrap: " + std::to_string(out.dropped) + " of " + std::to_string(spec.replicates) +
                         " replicates failed, more than the tolerated fraction");
  }
  out.pooled.resize(static_cast<Eigen::Index>(kept * spec.inner_draws));
  Eigen::Index offset = 0;
  for (const auto& r : results) {
    if (r) {
      out.pooled.segment(offset, r->draws.size()) = r->draws;
      offset += r->draws.size();
      out.replicates.push_back(r->summary);
    }
  }
  out.with = summarize(out.pooled);
  return out;
}

OrderSummary order_summary(const Eigen::VectorXd& values) {
  const auto B = static_cast<std::size_t>(values.size());
  if (B == 0) {
    throw UsageError("order summary of an empty vector");
  }
  std::vector<double> sorted(values.data(), values.data() + B);
  std::sort(sorted.begin(), sorted.end());
  const auto lo = static_cast<std::size_t>(std::ceil(0.025 * static_cast<double>(B) - 1e-9));
  const auto hi = static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(B) - 1e-9));
  OrderSummary s;
  s.pm = values.mean();
  s.psd = sd_of(values);
  s.interval = {sorted[std::max<std::size_t>(lo, 1) - 1], sorted[std::max<std::size_t>(hi, 1) - 1]};
  return s;
}

PreliminaryBootstrap preliminary_ps_bootstrap(const Eigen::MatrixXd& X2, const Eigen::VectorXd& y2,
                                              const Eigen::VectorXd& W2, std::size_t replicates,
                                              std::uint64_t seed) {
  const Eigen::Index n = y2.size();
  if (X2.rows() != n || W2.size() != n || n == 0) {
    throw UsageError("preliminary bootstrap: dimension mismatch");
  }
  if ((W2.array() <= 0.0).any()) {
    throw DataError("preliminary bootstrap: design weights must be positive");
  }
  if (replicates == 0) {
    throw UsageError("preliminary bootstrap needs at least one replicate");
  }
  const Eigen::Index p = X2.cols();
  PreliminaryBootstrap out;
  out.N.resize(static_cast<Eigen::Index>(replicates));
  out.xbar.resize(static_cast<Eigen::Index>(replicates), p);
  out.ybar.resize(static_cast<Eigen::Index>(replicates));
  const std::uint64_t id = stream_tag("ps-bootstrap");
  for (std::size_t b = 0; b < replicates; ++b) {
    RngStream stream(seed, id, b);
    const Eigen::VectorXd g = draw_dirichlet_flat(static_cast<std::size_t>(n), stream);
    const Eigen::VectorXd Wb = static_cast<double>(n) * g.cwiseProduct(W2);
    const double N = Wb.sum();
    const auto row = static_cast<Eigen::Index>(b);
    out.N[row] = N;
    out.xbar.row(row) = (X2.transpose() * Wb).transpose() / N;
    out.ybar[row] = Wb.dot(y2) / N;
  }
  out.N_summary = order_summary(out.N);
  for (Eigen::Index j = 0; j < p; ++j) {
    out.xbar_summary.push_back(order_summary(out.xbar.col(j)));
  }
  out.ybar_summary = order_summary(out.ybar);
  return out;
}

}  // namespace survint
