#pragma once

#include <functional>
#include <string>
#include <vector>

namespace torsion {

// Material triple. yield_stress is the threshold on the squared stress
// intensity |grad u|^2 (serialized as "xi0_sq"); shear_modulus is G.
// kappa in [0,1]: 1 is linearly elastic, 0 is perfectly plastic.
struct MaterialParams {
  double kappa = 1.0;
  double yield_stress = 0.02;
  double shear_modulus = 1.0;

  bool operator==(const MaterialParams&) const = default;
};

// Throws std::invalid_argument unless kappa in [0,1], yield_stress > 0,
// shear_modulus > 0, all finite.
void validate(const MaterialParams& params);

// Diffusion coefficient as a function of s = |grad u|^2.
struct PlasticityFn {
  std::string name;
  std::function<double(double)> eval;

  double operator()(double s) const { return eval(s); }
};

// Power-law hardening coefficient:
//   g(s) = 1/G                           for s <= yield
//        = (1/G) * (s/yield)^((1-kappa)/2) for s >  yield
double g_power_hardening(double s, const MaterialParams& params);

// Wraps g_power_hardening; validates params up front.
PlasticityFn power_hardening(const MaterialParams& params);

// g(s) = 1/(1+s), the bounded rational coefficient used as a second
// manufactured-solution test case.
double g_rational(double s);
PlasticityFn rational_diffusion();

// Checks the structural conditions a coefficient must satisfy for the
// linearized iteration to be well posed: 0 < c1 <= g <= c2, g nondecreasing
// in s, and g constant on [0, yield]. Returns human-readable violations,
// empty when admissible.
std::vector<std::string> check_admissible(const MaterialParams& params);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const Interval&) const = default;
};

// Componentwise parameter box, used for priors and post-update clamping.
struct ParamBox {
  Interval kappa{0.0, 1.0};
  Interval yield_sq{0.0, 1.0};
  Interval shear_modulus{0.0, 1.0};

  bool operator==(const ParamBox&) const = default;
};

double clamp(double x, const Interval& iv);
MaterialParams clamp_to_box(const MaterialParams& p, const ParamBox& box);

}  // namespace torsion
