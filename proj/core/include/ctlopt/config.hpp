#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctlopt/orchestrator.hpp"

namespace ctlopt {

struct BackendConfig {
  std::string kind = "heuristic";  // heuristic | live | replay
  ChatEndpointConfig endpoint;     // live only
  std::string transcript;          // replay only
};

/// A fixed-gain method row for Monte Carlo comparisons.
struct MethodSpec {
  std::string name;
  ControllerKind kind = ControllerKind::FSF;
  std::map<std::string, double> gains;
};

/// Parsed run configuration (JSON file; schema in the README).
struct RunConfig {
  std::string plant_id = "dc_motor";
  PlantModel plant{DcMotorParams{}};

  std::vector<ControllerKind> controllers{ControllerKind::P};
  std::vector<Scenario> scenarios;  // empty => default ladder for the plant
  bool agent_selector = false;
  bool agent_scenarist = false;

  LoopSettings settings;
  SimConfig sim;
  bool sim_overridden = false;

  std::map<AgentRole, BackendConfig> agents;  // unset roles => heuristic
  std::vector<std::uint64_t> seeds{42};
  std::string out_dir = "runs";
  std::string prompt_dir;

  std::vector<MethodSpec> methods;  // montecarlo comparisons
};

/// Loads and validates a run configuration. Throws ConfigError with a
/// diagnostic on any schema problem.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

/// Builds the per-role backend assignment for one seeded run.
AgentBinding build_binding(const RunConfig& config, std::uint64_t seed);

/// Builds the initial campaign state for one seeded run.
RunState build_state(const RunConfig& config, std::uint64_t seed);

}  // namespace ctlopt
