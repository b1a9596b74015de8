#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "torsion/forward.hpp"
#include "torsion/grid.hpp"
#include "torsion/irekm.hpp"
#include "torsion/plasticity.hpp"

namespace torsion_cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a command needs, resolved from defaults, an optional JSON
// config file and dotted-path command-line overrides.
struct RunConfig {
  torsion::GridSpec grid{1.0, 1.0, 50, 50};
  torsion::MaterialParams material{0.5, 0.02, 42.3};
  std::string test;  // "", "test1" (hardening law) or "test2" (rational law)
  double phi = 1.0;
  std::vector<double> angles{1.0, 0.5, 0.1, 0.005};
  double sigma = 1e-4;
  std::uint64_t seed = 1;
  torsion::ForwardSettings forward;
  torsion::IrekmSettings irekm;  // tau/delta_override filled when set > 0
  torsion::PriorSpec prior{{0.2, 0.9}, {0.0, 0.15}, {42.0, 43.0}};
  int jobs = 1;
  std::string out = "out";
};

// Overrides are (dotted.path, raw value) pairs, e.g. ("grid.Nx", "20").
using Overrides = std::vector<std::pair<std::string, std::string>>;

// Pairs up leftover command-line tokens: "--a.b", "v" or "--a.b=v".
Overrides parse_override_tokens(const std::vector<std::string>& tokens);

// Resolution order: built-in defaults, then the config file (if non-empty),
// then overrides in the order given. Unknown keys are rejected. A seed of 0
// falls back to the TORSION_SEED environment variable, then to 1.
RunConfig load_config(const std::string& config_path, const Overrides& overrides);

// The JSON document the above resolution produced (for provenance output).
std::string config_to_json(const RunConfig& cfg);

}  // namespace torsion_cli
