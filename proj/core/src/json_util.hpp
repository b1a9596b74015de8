#pragma once

// Internal only: keeps the json dependency out of the public headers.

#include <cstdio>
#include <string>

#include <json.hpp>

namespace torsion::detail {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal for a double, as nlohmann emits it. Used where
// numbers are embedded in hand-assembled text (JSONL lines, CSV cells).
inline std::string num_str(double x) { return json(x).dump(); }

}  // namespace torsion::detail
