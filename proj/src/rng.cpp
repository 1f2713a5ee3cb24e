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

#include "survint/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "survint/error.hpp"

namespace survint {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53U;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57U;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9U;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85U;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 2> derive_key(std::uint64_t seed, std::uint64_t stream_id) {
  const std::uint64_t k = mix64(seed ^ mix64(stream_id + 0x632BE59BD9B4E019ULL));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_tag(std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t substream(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index ^ 0xA0761D6478BD642FULL));
}

UniformBlock::UniformBlock(std::array<std::uint32_t, 2> key, std::uint64_t counter) : key_{key}, counter_{counter} {}

double UniformBlock::uniform() {
  if (used_ >= 4) {
    buffer_ = philox4x32({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)},
                         key_);
    ++index_;
    used_ = 0;
  }
  const std::uint64_t bits = (static_cast<std::uint64_t>(buffer_[used_]) << 32) | buffer_[used_ + 1];
  used_ += 2;
  // 53 random bits shifted by half an ulp: never exactly 0 or 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double UniformBlock::normal() {
  while (true) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter)
    : seed_{seed}, stream_id_{stream_id}, counter_{counter}, key_{derive_key(seed, stream_id)} {}

UniformBlock RngStream::next_block() { return UniformBlock{key_, counter_++}; }

RngStream RngStream::split(std::uint64_t index) const { return RngStream{seed_, substream(stream_id_, index)}; }

double draw_uniform(RngStream& stream) { return stream.next_block().uniform(); }

double draw_normal(RngStream& stream) { return stream.next_block().normal(); }

bool draw_bernoulli(double p, RngStream& stream) { return stream.next_block().uniform() < p; }

double gamma_from_block(double shape, UniformBlock& block) {
  if (shape < 1.0) {
    // Boost to shape + 1 and scale back down by U^{1/shape}.
    const double g = gamma_from_block(shape + 1.0, block);
    return g * std::pow(block.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = block.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) {
      continue;
    }
    v = v * v * v;
    const double u = block.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

double draw_gamma(double shape, double rate, RngStream& stream) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw UsageError("gamma parameters must be positive");
  }
  auto block = stream.next_block();
  return gamma_from_block(shape, block) / rate;
}

double draw_inverse_gamma(double shape, double scale, RngStream& stream) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw UsageError("inverse-gamma parameters must be positive");
  }
  auto block = stream.next_block();
  double g = gamma_from_block(shape, block);
  // Underflow guard for tiny shapes; keeps the draw finite.
  g = std::max(g, std::numeric_limits<double>::min());
  return scale / g;
}

Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& stream) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw UsageError("draw_mvn: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("draw_mvn: covariance is not positive definite");
  }
  return draw_mvn_factor(mean, llt.matrixL(), stream);
}

Eigen::VectorXd draw_mvn_factor(const Eigen::VectorXd& mean, const Eigen::MatrixXd& lower, RngStream& stream) {
  auto block = stream.next_block();
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = block.normal();
  }
  return mean + lower.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd draw_dirichlet_flat(std::size_t k, RngStream& stream) {
  auto block = stream.next_block();
  Eigen::VectorXd g(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    g[i] = -std::log(block.uniform());
  }
  return g / g.sum();
}

Eigen::VectorXd normalize_log_weights(std::span<const double> log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (const double lw : log_weights) {
    if (!std::isnan(lw)) {
      top = std::max(top, lw);
    }
  }
  if (!std::isfinite(top)) {
    throw UsageError("draw_from_grid: no finite log weight");
  }
  Eigen::VectorXd p(static_cast<Eigen::Index>(log_weights.size()));
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double lw = log_weights[i];
    p[static_cast<Eigen::Index>(i)] = std::isnan(lw) ? 0.0 : std::exp(lw - top);
  }
  return p / p.sum();
}

std::size_t lookup_cdf(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) {
    // u * total rounded up to total: take the last positive-mass cell.
    std::size_t i = cumulative.size() - 1;
    while (i > 0 && cumulative[i - 1] == cumulative[i]) {
      --i;
    }
    return i;
  }
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::size_t draw_from_grid(std::span<const double> log_weights, RngStream& stream) {
  const Eigen::VectorXd p = normalize_log_weights(log_weights);
  std::vector<double> cumulative(static_cast<std::size_t>(p.size()));
  double running = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    running += p[i];
    cumulative[static_cast<std::size_t>(i)] = running;
  }
  return lookup_cdf(cumulative, draw_uniform(stream));
}

}  // namespace survint
