#pragma once

#include <json.hpp>

#include "pamlab/noise_model.hpp"

namespace pamlab {

// Internal: parse a spec config block (see spec_from_json_text for the
// public text-based entry point).
NoiseSpec spec_from_json(const nlohmann::json& j);

}  // namespace pamlab
