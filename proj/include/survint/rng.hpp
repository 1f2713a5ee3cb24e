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

#ifndef SURVINT_RNG_HPP
#define SURVINT_RNG_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

/**
 * \file
 * \brief Counter-based random streams and the distributions built on them.
 *
 * A stream is identified by (master seed, stream id) and advanced by a 64-bit
 * counter. Every sampler below consumes exactly one counter value per call,
 * regardless of how many uniforms it needs internally: the uniforms of one
 * call are read from a block addressed by (seed, stream id, counter, j).
 * Scheduling work across threads therefore cannot change any draw, provided
 * each unit of work owns its stream.
 */

namespace survint {

/// Philox4x32-10 bijection. Exposed for the golden-value tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to derive keys and stream ids.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit stream id for a module tag (FNV-1a of the text).
std::uint64_t stream_tag(std::string_view tag);

/// Combine a parent stream id with an index (replicate, draw, ...).
std::uint64_t substream(std::uint64_t parent, std::uint64_t index);

/// Sequential uniforms belonging to a single counter value of a stream.
class UniformBlock {
 public:
  UniformBlock(std::array<std::uint32_t, 2> key, std::uint64_t counter);

  /// Next uniform in the open interval (0, 1).
  double uniform();

  /// Standard normal by the Marsaglia polar method.
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_;
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// A value-like, splittable random stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  /// Block for the current counter; advances the counter by one.
  UniformBlock next_block();

  /// Independent child stream (same seed, derived id, counter reset).
  [[nodiscard]] RngStream split(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_;
  std::array<std::uint32_t, 2> key_;
};

/// Gamma(shape, rate = 1) from the uniforms of one block (Marsaglia-Tsang).
double gamma_from_block(double shape, UniformBlock& block);

// Each of the following consumes exactly one counter value.

double draw_uniform(RngStream& stream);
double draw_normal(RngStream& stream);
bool draw_bernoulli(double p, RngStream& stream);

/// Gamma with density proportional to x^{shape-1} e^{-rate x}.
double draw_gamma(double shape, double rate, RngStream& stream);

/// Inverse gamma with density proportional to x^{-shape-1} e^{-scale/x}; mean scale/(shape-1).
double draw_inverse_gamma(double shape, double scale, RngStream& stream);

/// Multivariate normal. Throws NumericalError if `cov` has no SPD factor.
Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& stream);

/// mean + L z for a precomputed lower-triangular factor L (cov = L L').
Eigen::VectorXd draw_mvn_factor(const Eigen::VectorXd& mean, const Eigen::MatrixXd& lower, RngStream& stream);

/// Dirichlet(1, ..., 1) probabilities of length k.
Eigen::VectorXd draw_dirichlet_flat(std::size_t k, RngStream& stream);

/// Index drawn with probability proportional to exp(log_weights[i]).
/// Throws UsageError when every entry is -inf (or NaN).
std::size_t draw_from_grid(std::span<const double> log_weights, RngStream& stream);

/// Inverse-CDF lookup on a cumulative mass vector (last entry = total).
std::size_t lookup_cdf(std::span<const double> cumulative, double u);

/// Normalized probabilities from log weights by max subtraction.
Eigen::VectorXd normalize_log_weights(std::span<const double> log_weights);

}  // namespace survint

#endif
