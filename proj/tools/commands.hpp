#pragma once

#include <string>

#include "config.hpp"

namespace torsion_cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitMaxIter = 3;

// Solve one forward problem (plain, test1 or test2 mode) and write
// solution.csv, convergence.csv and summary.json. Returns kExitOk or
// kExitNoConvergence.
int cmd_forward(const RunConfig& cfg);

// Generate a synthetic observation set, print per-angle classifications and
// write observations.json.
int cmd_generate(const RunConfig& cfg);

// Run the ensemble inversion against a data file; write trace.jsonl,
// errors.csv and summary.json. Returns kExitOk on a discrepancy stop,
// kExitMaxIter on an iteration-cap stop, kExitNoConvergence if a member's
// forward solve fails (partial trace still written).
int cmd_invert(const RunConfig& cfg, const std::string& data_path);

// Re-run a bundled reference table (T1, T4, T5, T6, T7, T8) over `seeds`
// seeds and write report.csv / report.txt. Returns kExitOk iff every cell
// lands inside its band.
int cmd_reproduce(const RunConfig& cfg, const std::string& table_id, int seeds);

}  // namespace torsion_cli
