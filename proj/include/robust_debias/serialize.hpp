#pragma once

#include <json.hpp>
#include <string>

#include "robust_debias/dof.hpp"
#include "robust_debias/sim.hpp"
#include "robust_debias/solver.hpp"
#include "robust_debias/stein.hpp"

namespace robust_debias {

nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const TraceReport& report);
nlohmann::json stein_to_json(const SteinReport& report);

SimConfig sim_config_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace robust_debias
