#pragma once

#include <cstdint>

namespace torsion {

// Counter-based random numbers: every variate is a pure function of
// (seed, role, stream, counter), so draws are reproducible regardless of
// evaluation order or thread count. Roles separate independent noise
// sources that happen to share a seed.
enum class Role : std::uint64_t {
  PriorInit = 1,      // initial ensemble draws
  DataNoise = 2,      // measurement noise added to clean torques
  EnsembleNoise = 3,  // per-member data perturbations inside the filter
};

// splitmix64 finalizer chained over the four words.
std::uint64_t mix(std::uint64_t seed, Role role, std::uint64_t stream,
                  std::uint64_t counter);

// Uniform on the open interval (0,1); never returns 0 or 1.
double uniform01(std::uint64_t seed, Role role, std::uint64_t stream,
                 std::uint64_t counter);

// Standard normal via the inverse CDF applied to uniform01. One counter
// per variate.
double normal(std::uint64_t seed, Role role, std::uint64_t stream,
              std::uint64_t counter);

// Inverse of the standard normal CDF (Acklam's rational approximation,
// relative error below 1.2e-9). Throws std::invalid_argument outside (0,1).
double inverse_normal_cdf(double p);

}  // namespace torsion
