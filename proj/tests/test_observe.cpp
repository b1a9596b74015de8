#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "torsion/observe.hpp"
#include "torsion/rng.hpp"

using namespace torsion;

namespace {
const GridSpec kGrid{1.0, 1.0, 10, 10};
const MaterialParams kSoft{0.3, 0.02, 42.3};
}  // namespace

TEST_CASE("angle validation") {
  CHECK_NOTHROW(validate(AngleSet{{1.0, 0.5, 0.1, 0.005}}));
  CHECK_NOTHROW(validate(AngleSet{{}}));
  CHECK_THROWS_AS(validate(AngleSet{{1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(AngleSet{{-0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(AngleSet{{0.5, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(AngleSet{{std::nan("")}}), std::invalid_argument);
}

TEST_CASE("observe returns per-angle torques consistent with single solves") {
  AngleSet angles{{1.0, 0.1}};
  const auto torques = observe(kSoft, angles, kGrid);
  REQUIRE(torques.size() == 2u);

  const PlasticityFn fn = power_hardening(kSoft);
  for (std::size_t i = 0; i < 2; ++i) {
    ForwardResult r = solve_forward(kGrid, fn, angles.phi[i]);
    REQUIRE(r.converged);
    CHECK(torques[i] == torque(r.u_star));
  }

  const auto detailed = observe_detailed(kSoft, angles, kGrid);
  REQUIRE(detailed.size() == 2u);
  CHECK(detailed[0].torque == torques[0]);
  CHECK(detailed[1].torque == torques[1]);
  CHECK(detailed[0].max_grad_sq > detailed[1].max_grad_sq);
  CHECK(detailed[0].iterations > 0);
}

TEST_CASE("observe is independent of the job count") {
  AngleSet angles{{1.0, 0.5, 0.1, 0.005}};
  const auto serial = observe(kSoft, angles, kGrid, {}, 1);
  const auto threaded = observe(kSoft, angles, kGrid, {}, 4);
  CHECK(serial == threaded);
}

TEST_CASE("observe reports every non-converged angle") {
  AngleSet angles{{1.0, 0.5}};
  ForwardSettings fwd;
  fwd.max_iter = 1;
  bool threw = false;
  try {
    observe(kSoft, angles, kGrid, fwd);
  } catch (const ForwardError& e) {
    threw = true;
    CHECK(e.failed == std::vector<int>{0, 1});
  }
  CHECK(threw);
}

TEST_CASE("noise-free data equals a fresh observation bit for bit") {
  AngleSet angles{{1.0, 0.5, 0.1, 0.005}};
  ObservationSet data = generate_data(kSoft, angles, 0.0, 99, kGrid);
  CHECK(data.d == observe(kSoft, angles, kGrid));
  CHECK(data.sigma == 0.0);
  REQUIRE(data.truth.has_value());
  CHECK(*data.truth == kSoft);
}

TEST_CASE("noisy data is clean data plus keyed gaussian draws") {
  AngleSet angles{{1.0, 0.1}};
  const double sigma = 1e-3;
  const std::uint64_t seed = 1234;
  ObservationSet data = generate_data(kSoft, angles, sigma, seed, kGrid);
  const auto clean = observe(kSoft, angles, kGrid);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    CHECK(data.d[i] == clean[i] + sigma * normal(seed, Role::DataNoise, 0, i));
  }
  // Same seed reproduces; a different seed does not.
  ObservationSet again = generate_data(kSoft, angles, sigma, seed, kGrid);
  CHECK(again.d == data.d);
  ObservationSet other = generate_data(kSoft, angles, sigma, seed + 1, kGrid);
  CHECK(other.d != data.d);
}

TEST_CASE("ensemble perturbations are keyed by member and component") {
  AngleSet angles{{1.0, 0.1}};
  ObservationSet data;
  data.angles = angles;
  data.d = {2.0, 0.3};
  data.sigma = 0.01;
  data.seed = 77;
  const auto pert = perturb_for_ensemble(data, 3);
  REQUIRE(pert.size() == 3u);
  for (int j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(pert[j][i] ==
            data.d[i] + data.sigma * normal(77, Role::EnsembleNoise, j, i));
    }
  }
  // Zero sigma keeps the data unperturbed.
  data.sigma = 0.0;
  for (const auto& row : perturb_for_ensemble(data, 3)) CHECK(row == data.d);
  CHECK_THROWS_AS(perturb_for_ensemble(data, 1), std::invalid_argument);
}

TEST_CASE("observation validation") {
  ObservationSet data;
  data.angles.phi = {1.0, 0.5};
  data.d = {0.8, 0.5};
  data.sigma = 0.1;
  CHECK_NOTHROW(validate(data));

  ObservationSet short_d = data;
  short_d.d = {0.8};
  CHECK_THROWS_AS(validate(short_d), std::invalid_argument);

  ObservationSet bad_sigma = data;
  bad_sigma.sigma = -1.0;
  CHECK_THROWS_AS(validate(bad_sigma), std::invalid_argument);

  ObservationSet bad_value = data;
  bad_value.d[1] = std::nan("");
  CHECK_THROWS_AS(validate(bad_value), std::invalid_argument);
}

TEST_CASE("observation json round trip preserves every field") {
  ObservationSet data;
  data.angles.phi = {1.0, 0.5, 0.1};
  data.d = {0.80938127, 0.53836164, 0.20888534};
  data.sigma = 1e-4;
  data.seed = 424242;
  data.truth = MaterialParams{0.3, 0.02, 42.3077};

  const std::string text = observation_to_json(data);
  ObservationSet back = observation_from_json(text);
  CHECK(back.angles.phi == data.angles.phi);
  CHECK(back.d == data.d);
  CHECK(back.sigma == data.sigma);
  CHECK(back.seed == data.seed);
  REQUIRE(back.truth.has_value());
  CHECK(*back.truth == *data.truth);

  data.truth.reset();
  ObservationSet anon = observation_from_json(observation_to_json(data));
  CHECK(!anon.truth.has_value());
}

TEST_CASE("observation file round trip and parse failures") {
  ObservationSet data;
  data.angles.phi = {0.25};
  data.d = {0.125};
  data.sigma = 0.0;
  data.seed = 5;
  const std::string path = "observation_round_trip.json";
  write_observation(data, path);
  ObservationSet back = read_observation(path);
  CHECK(back.d == data.d);
  std::remove(path.c_str());

  CHECK_THROWS_AS(observation_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(observation_from_json("{\"angles\":[1.0]}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(read_observation("no_such_file.json"), std::runtime_error);
}
