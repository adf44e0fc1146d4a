#pragma once

#include <cstdint>

#include "dpbl/types.hpp"

namespace dpbl {

/// Counter-based SplitMix64: the k-th draw of a stream is a pure function of
/// (seed, k), so any position can be replayed without stepping through the
/// preceding ones.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t at(std::uint64_t position) const;

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform_open(std::uint64_t position) const;

  /// Seed of an independent child stream.
  static std::uint64_t split(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t seed_;
};

/// Laplace(0, scale) sampler driven by a counter-based stream.
class LaplaceNoise {
 public:
  LaplaceNoise(double scale, std::uint64_t seed);

  /// Scale alpha/epsilon of the identity-query mechanism.
  static LaplaceNoise for_params(const PrivacyParams& params);

  double scale() const { return scale_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_position() const { return position_; }

  double sample();

  /// Inverse CDF, u in (-1/2, 1/2).
  static double inverse_cdf(double u, double scale);

 private:
  double scale_;
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  CounterRng rng_;
};

/// Laplace mechanism on the identity query of every coordinate. Negative
/// outputs are kept; feasibility repair happens downstream.
DemandVector obfuscate_demands(const DemandVector& d,
                               const PrivacyParams& params,
                               LaplaceNoise& noise);

/// True iff d and d_prime differ in at most one coordinate, by at most alpha.
bool adjacency_check(const DemandVector& d, const DemandVector& d_prime,
                     double alpha);

/// CDF of Laplace(0, scale).
double laplace_cdf(double x, double scale);

}  // namespace dpbl
