#pragma once

// Bundled reference tables for the `reproduce` command. T1 and T5 are
// forward stress-intensity maxima; T4, T6, T7 and T8 are inversion error
// tables over six data configurations and three noise levels.

#include <array>
#include <string>
#include <vector>

namespace torsion_cli {

struct ForwardCase {
  std::string label;        // "case1" / "case2"
  double kappa;
  std::array<double, 4> expected;  // max |grad u|^2 per angle
};

struct ForwardTable {
  std::string id;
  double yield_sq;
  double shear_modulus;
  std::array<double, 4> angles;
  std::vector<ForwardCase> cases;
};

// Data configurations shared by every inversion table: subsets of the
// four-angle set, named by their plastic/elastic composition.
struct DataConfig {
  std::string label;
  std::vector<int> angle_idx;
};

struct InversionTable {
  std::string id;
  double kappa;
  double yield_sq;
  double shear_modulus;
  std::array<double, 2> prior_shear;  // prior interval for G
  std::array<double, 4> angles;
  // reference[config][sigma] for sigma in {1e-4, 1e-3, 1e-2}.
  std::array<std::array<double, 3>, 6> reference;
};

extern const std::array<double, 3> kSigmaLevels;
extern const std::array<DataConfig, 6> kDataConfigs;

const ForwardTable* find_forward_table(const std::string& id);
const InversionTable* find_inversion_table(const std::string& id);

}  // namespace torsion_cli
