#include "torsion/plasticity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace torsion {

void validate(const MaterialParams& params) {
  if (!std::isfinite(params.kappa) || params.kappa < 0.0 || params.kappa > 1.0) {
    throw std::invalid_argument("material: kappa must lie in [0,1], got " +
                                std::to_string(params.kappa));
  }
  if (!std::isfinite(params.yield_stress) || !(params.yield_stress > 0.0)) {
    throw std::invalid_argument("material: yield threshold must be positive, got " +
                                std::to_string(params.yield_stress));
  }
  if (!std::isfinite(params.shear_modulus) || !(params.shear_modulus > 0.0)) {
    throw std::invalid_argument("material: shear modulus must be positive, got " +
                                std::to_string(params.shear_modulus));
  }
}

double g_power_hardening(double s, const MaterialParams& params) {
  const double g_el = 1.0 / params.shear_modulus;
  if (s <= params.yield_stress) return g_el;
  return g_el * std::pow(s / params.yield_stress, 0.5 * (1.0 - params.kappa));
}

PlasticityFn power_hardening(const MaterialParams& params) {
  validate(params);
  return PlasticityFn{
      "power_hardening",
      [params](double s) { return g_power_hardening(s, params); }};
}

double g_rational(double s) { return 1.0 / (1.0 + s); }

PlasticityFn rational_diffusion() {
  return PlasticityFn{"rational", [](double s) { return g_rational(s); }};
}

std::vector<std::string> check_admissible(const MaterialParams& params) {
  std::vector<std::string> bad;
  if (!std::isfinite(params.kappa) || params.kappa < 0.0 || params.kappa > 1.0) {
    bad.push_back("kappa outside [0,1]");
  }
  if (!std::isfinite(params.yield_stress) || !(params.yield_stress > 0.0)) {
    bad.push_back("yield threshold not positive");
  }
  if (!std::isfinite(params.shear_modulus) || !(params.shear_modulus > 0.0)) {
    bad.push_back("shear modulus not positive");
  }
  if (!bad.empty()) return bad;

  // Structural checks on g itself: positive lower/upper bounds on the
  // plateau and monotone growth past it. With kappa in [0,1] the exponent
  // (1-kappa)/2 is in [0,1/2], so g is nondecreasing; probe a few spots to
  // catch violations if the law is ever swapped out.
  const double g0 = g_power_hardening(0.0, params);
  const double gy = g_power_hardening(params.yield_stress, params);
  if (g0 != gy) bad.push_back("g not constant on the elastic plateau");
  double prev = gy;
  for (double factor : {1.5, 4.0, 64.0, 1e6}) {
    double gs = g_power_hardening(factor * params.yield_stress, params);
    if (gs < prev) {
      bad.push_back("g decreasing past the yield threshold");
      break;
    }
    prev = gs;
  }
  return bad;
}

double clamp(double x, const Interval& iv) {
  if (x < iv.lo) return iv.lo;
  if (x > iv.hi) return iv.hi;
  return x;
}

MaterialParams clamp_to_box(const MaterialParams& p, const ParamBox& box) {
  return MaterialParams{clamp(p.kappa, box.kappa),
                        clamp(p.yield_stress, box.yield_sq),
                        clamp(p.shear_modulus, box.shear_modulus)};
}

}  // namespace torsion
