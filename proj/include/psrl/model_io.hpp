#pragma once

#include "psrl/model.hpp"

#include <json.hpp>

namespace psrl {

/// Fields S, A, O, H, b1, T[h][s][a][s'], Z[h][s][o], r[h][o][a].
nlohmann::json model_to_json(const PomdpModel& m);

/// Inverse of model_to_json. Throws std::invalid_argument on shape errors;
/// distribution validity is left to validate_model.
PomdpModel model_from_json(const nlohmann::json& j);

/// Flat integer array of length 2H.
nlohmann::json trajectory_to_json(const Trajectory& tau);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace psrl
