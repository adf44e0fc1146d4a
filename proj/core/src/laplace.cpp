#include "dpbl/laplace.hpp"

#include <cmath>
#include <stdexcept>

namespace dpbl {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::at(std::uint64_t position) const {
  return mix64(seed_ + (position + 1) * kGolden);
}

double CounterRng::uniform_open(std::uint64_t position) const {
  // (k + 0.5) / 2^53 for k in [0, 2^53) never hits 0 or 1.
  const double k = static_cast<double>(at(position) >> 11);
  return (k + 0.5) * 0x1.0p-53;
}

std::uint64_t CounterRng::split(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + kGolden));
}

LaplaceNoise::LaplaceNoise(double scale, std::uint64_t seed)
    : scale_(scale), seed_(seed), rng_(seed) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    throw std::invalid_argument("LaplaceNoise: scale must be positive");
  }
}

LaplaceNoise LaplaceNoise::for_params(const PrivacyParams& params) {
  params.validate();
  return LaplaceNoise(params.alpha / params.epsilon, params.seed);
}

double LaplaceNoise::inverse_cdf(double u, double scale) {
  if (u == 0.0) return 0.0;
  const double sign = u > 0 ? 1.0 : -1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

double LaplaceNoise::sample() {
  const double u = rng_.uniform_open(position_++) - 0.5;
  return inverse_cdf(u, scale_);
}

DemandVector obfuscate_demands(const DemandVector& d,
                               const PrivacyParams& params,
                               LaplaceNoise& noise) {
  if (noise.scale() != params.alpha / params.epsilon) {
    throw std::invalid_argument(
        "obfuscate_demands: noise scale must equal alpha / epsilon");
  }
  std::vector<double> out(d.values().begin(), d.values().end());
  for (double& v : out) v += noise.sample();
  return DemandVector(std::move(out), DemandRole::Noisy);
}

bool adjacency_check(const DemandVector& d, const DemandVector& d_prime,
                     double alpha) {
  if (d.size() != d_prime.size()) {
    throw DimensionError("adjacency_check: length mismatch");
  }
  int differing = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == d_prime[i]) continue;
    if (++differing > 1 || std::abs(d[i] - d_prime[i]) > alpha) return false;
  }
  return true;
}

double laplace_cdf(double x, double scale) {
  if (x < 0) return 0.5 * std::exp(x / scale);
  return 1.0 - 0.5 * std::exp(-x / scale);
}

}  // namespace dpbl
