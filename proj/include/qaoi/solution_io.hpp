#pragma once

#include <string>

#include <json.hpp>

#include "qaoi/sq_solver.hpp"

namespace qaoi {

nlohmann::json to_json(const SolverSolution& sol);
nlohmann::json to_json(const RefinedSolution& ref);
SolverSolution solution_from_json(const nlohmann::json& doc);
RefinedSolution refined_from_json(const nlohmann::json& doc);

void write_json(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::string& path);

/// Loads the deployable solution from either document kind (the upper table of a
/// refined document).
SolverSolution load_policy_solution(const std::string& path);

}  // namespace qaoi
