#include "torsion/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace torsion {

namespace {

// splitmix64 finalizer.
std::uint64_t sm64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix(std::uint64_t seed, Role role, std::uint64_t stream,
                  std::uint64_t counter) {
  std::uint64_t h = sm64(seed ^ 0x9e3779b97f4a7c15ULL);
  h = sm64(h ^ static_cast<std::uint64_t>(role));
  h = sm64(h ^ stream);
  h = sm64(h ^ counter);
  return h;
}

double uniform01(std::uint64_t seed, Role role, std::uint64_t stream,
                 std::uint64_t counter) {
  const std::uint64_t h = mix(seed, role, stream, counter);
  // Top 53 bits, centered on the cell: strictly inside (0,1).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("inverse_normal_cdf: p must lie in (0,1), got " +
                                std::to_string(p));
  }
  // Acklam's rational approximation, |relative error| < 1.2e-9.
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal(std::uint64_t seed, Role role, std::uint64_t stream,
              std::uint64_t counter) {
  return inverse_normal_cdf(uniform01(seed, role, stream, counter));
}

}  // namespace torsion
