#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torsion/forward.hpp"
#include "torsion/grid.hpp"
#include "torsion/plasticity.hpp"

namespace torsion {

// Twist angles per unit length. All entries must be positive, finite and
// pairwise distinct.
struct AngleSet {
  std::vector<double> phi;
};

void validate(const AngleSet& angles);

// One forward solve failed while mapping parameters to torques. `failed`
// lists the angle indices that did not converge.
struct ForwardError : std::runtime_error {
  std::vector<int> failed;
  ForwardError(const std::string& msg, std::vector<int> which)
      : std::runtime_error(msg), failed(std::move(which)) {}
};

// Parameter-to-observable map: torque at each angle. jobs > 1 solves the
// angles concurrently; results are written by index, so the output does not
// depend on scheduling. Throws ForwardError naming every non-converged angle.
std::vector<double> observe(const MaterialParams& material,
                            const AngleSet& angles, const GridSpec& grid,
                            const ForwardSettings& fwd = {}, int jobs = 1);

struct AngleObservation {
  double torque = 0.0;
  double max_grad_sq = 0.0;
  int iterations = 0;
};

// observe() plus the stress-intensity maximum per angle, for classification.
std::vector<AngleObservation> observe_detailed(const MaterialParams& material,
                                               const AngleSet& angles,
                                               const GridSpec& grid,
                                               const ForwardSettings& fwd = {},
                                               int jobs = 1);

// Torque data with iid Gaussian noise: d_i = torque_i + sigma * eta_i.
// truth is kept when the data is synthetic so inversions can report errors.
struct ObservationSet {
  AngleSet angles;
  std::vector<double> d;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<MaterialParams> truth;
};

// d.size() must match angles, sigma >= 0, every d_i finite.
void validate(const ObservationSet& data);

// Noise draw i uses normal(seed, Role::DataNoise, 0, i).
ObservationSet generate_data(const MaterialParams& truth,
                             const AngleSet& angles, double sigma,
                             std::uint64_t seed, const GridSpec& grid,
                             const ForwardSettings& fwd = {}, int jobs = 1);

// Member j's perturbed copy: d_i + sigma * normal(seed,
// Role::EnsembleNoise, j, i). Independent of evaluation order.
std::vector<std::vector<double>> perturb_for_ensemble(
    const ObservationSet& data, int n_members);

// JSON schema: {"angles":[...], "d":[...], "sigma":s, "seed":n,
// "truth":{"kappa":..,"xi0_sq":..,"G":..} or null}.
std::string observation_to_json(const ObservationSet& data);
ObservationSet observation_from_json(const std::string& text);

void write_observation(const ObservationSet& data, const std::string& path);
ObservationSet read_observation(const std::string& path);

}  // namespace torsion
