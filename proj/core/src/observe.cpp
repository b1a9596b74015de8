#include "torsion/observe.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "parallel_util.hpp"
#include "torsion/rng.hpp"

namespace torsion {

void validate(const AngleSet& angles) {
  for (std::size_t i = 0; i < angles.phi.size(); ++i) {
    const double p = angles.phi[i];
    if (!std::isfinite(p) || !(p > 0.0)) {
      throw std::invalid_argument("angles: entry " + std::to_string(i) +
                                  " must be positive finite, got " +
                                  std::to_string(p));
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (angles.phi[k] == p) {
        throw std::invalid_argument("angles: entries " + std::to_string(k) +
                                    " and " + std::to_string(i) +
                                    " are duplicates");
      }
    }
  }
}

std::vector<AngleObservation> observe_detailed(const MaterialParams& material,
                                               const AngleSet& angles,
                                               const GridSpec& grid,
                                               const ForwardSettings& fwd,
                                               int jobs) {
  validate(material);
  validate(angles);
  validate(grid);
  const PlasticityFn fn = power_hardening(material);
  const int m = static_cast<int>(angles.phi.size());
  std::vector<AngleObservation> out(m);
  std::vector<char> bad(m, 0);
  detail::parallel_for(m, jobs, [&](int i) {
    const ForwardResult res = solve_forward(grid, fn, angles.phi[i], fwd);
    if (!res.converged) {
      bad[i] = 1;
      return;
    }
    out[i] = AngleObservation{torque(res.u_star), max_grad_sq(res.u_star),
                              res.iterations};
  });
  std::vector<int> failed;
  for (int i = 0; i < m; ++i) {
    if (bad[i]) failed.push_back(i);
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << "forward map did not converge at angle index";
    for (int i : failed) msg << ' ' << i << " (phi=" << angles.phi[i] << ')';
    throw ForwardError(msg.str(), failed);
  }
  return out;
}

std::vector<double> observe(const MaterialParams& material,
                            const AngleSet& angles, const GridSpec& grid,
                            const ForwardSettings& fwd, int jobs) {
  const auto detailed = observe_detailed(material, angles, grid, fwd, jobs);
  std::vector<double> torques(detailed.size());
  for (std::size_t i = 0; i < detailed.size(); ++i) {
    torques[i] = detailed[i].torque;
  }
  return torques;
}

void validate(const ObservationSet& data) {
  validate(data.angles);
  if (data.d.size() != data.angles.phi.size()) {
    throw std::invalid_argument("observations: " + std::to_string(data.d.size()) +
                                " values for " +
                                std::to_string(data.angles.phi.size()) +
                                " angles");
  }
  if (!std::isfinite(data.sigma) || data.sigma < 0.0) {
    throw std::invalid_argument("observations: sigma must be >= 0, got " +
                                std::to_string(data.sigma));
  }
  for (std::size_t i = 0; i < data.d.size(); ++i) {
    if (!std::isfinite(data.d[i])) {
      throw std::invalid_argument("observations: entry " + std::to_string(i) +
                                  " is not finite");
    }
  }
  if (data.truth) validate(*data.truth);
}

ObservationSet generate_data(const MaterialParams& truth,
                             const AngleSet& angles, double sigma,
                             std::uint64_t seed, const GridSpec& grid,
                             const ForwardSettings& fwd, int jobs) {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw std::invalid_argument("generate_data: sigma must be >= 0");
  }
  ObservationSet data;
  data.angles = angles;
  data.d = observe(truth, angles, grid, fwd, jobs);
  data.sigma = sigma;
  data.seed = seed;
  data.truth = truth;
  for (std::size_t i = 0; i < data.d.size(); ++i) {
    if (sigma > 0.0) {
      data.d[i] += sigma * normal(seed, Role::DataNoise, 0, i);
    }
  }
  return data;
}

std::vector<std::vector<double>> perturb_for_ensemble(const ObservationSet& data,
                                                      int n_members) {
  validate(data);
  if (n_members < 2) {
    throw std::invalid_argument("perturb_for_ensemble: need at least 2 members");
  }
  std::vector<std::vector<double>> out(n_members, data.d);
  if (data.sigma == 0.0) return out;
  for (int j = 0; j < n_members; ++j) {
    for (std::size_t i = 0; i < data.d.size(); ++i) {
      out[j][i] += data.sigma * normal(data.seed, Role::EnsembleNoise,
                                       static_cast<std::uint64_t>(j), i);
    }
  }
  return out;
}

std::string observation_to_json(const ObservationSet& data) {
  detail::json j;
  j["angles"] = data.angles.phi;
  j["d"] = data.d;
  j["sigma"] = data.sigma;
  j["seed"] = data.seed;
  if (data.truth) {
    j["truth"] = {{"kappa", data.truth->kappa},
                  {"xi0_sq", data.truth->yield_stress},
                  {"G", data.truth->shear_modulus}};
  } else {
    j["truth"] = nullptr;
  }
  return j.dump(2) + "\n";
}

ObservationSet observation_from_json(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw std::invalid_argument(std::string("observation json: ") + e.what());
  }
  ObservationSet data;
  try {
    data.angles.phi = j.at("angles").get<std::vector<double>>();
    data.d = j.at("d").get<std::vector<double>>();
    data.sigma = j.at("sigma").get<double>();
    data.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("truth").is_null()) {
      const auto& t = j.at("truth");
      data.truth = MaterialParams{t.at("kappa").get<double>(),
                                  t.at("xi0_sq").get<double>(),
                                  t.at("G").get<double>()};
    }
  } catch (const detail::json::exception& e) {
    throw std::invalid_argument(std::string("observation json: ") + e.what());
  }
  validate(data);
  return data;
}

void write_observation(const ObservationSet& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << observation_to_json(data);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ObservationSet read_observation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return observation_from_json(ss.str());
}

}  // namespace torsion
