#include "ctlopt/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace ctlopt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

double num(const json& j, const char* field, double fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_number()) fail(std::string(field) + " must be a number");
  return j[field].get<double>();
}

PlantModel build_plant(const std::string& id, const json& overrides) {
  auto get = [&](const char* field, double fallback) {
    return num(overrides, field, fallback);
  };
  if (id == "dc_motor") {
    DcMotorParams p;
    p.motor_constant = get("motor_constant", p.motor_constant);
    p.resistance = get("resistance", p.resistance);
    p.inductance = get("inductance", p.inductance);
    p.inertia = get("inertia", p.inertia);
    p.damping = get("damping", p.damping);
    p.voltage_limit = get("voltage_limit", p.voltage_limit);
    return PlantModel(p);
  }
  if (id == "ball_beam") {
    BallBeamParams p;
    p.gravity = get("gravity", p.gravity);
    p.ball_radius = get("ball_radius", p.ball_radius);
    p.ball_mass = get("ball_mass", p.ball_mass);
    p.ball_inertia = get("ball_inertia", p.ball_inertia);
    p.damping = get("damping", p.damping);
    p.input_limit = get("input_limit", p.input_limit);
    return PlantModel(p);
  }
  if (id == "pendulum") {
    PendulumParams p;
    p.mass = get("mass", p.mass);
    p.length = get("length", p.length);
    p.gravity = get("gravity", p.gravity);
    p.damping = get("damping", p.damping);
    p.torque_limit = get("torque_limit", p.torque_limit);
    return PlantModel(p);
  }
  if (id == "double_pendulum") {
    DoublePendulumParams p;
    p.mass1 = get("mass1", p.mass1);
    p.mass2 = get("mass2", p.mass2);
    p.length1 = get("length1", p.length1);
    p.length2 = get("length2", p.length2);
    p.gravity = get("gravity", p.gravity);
    p.input_limit = get("input_limit", p.input_limit);
    return PlantModel(p);
  }
  fail("unknown plant id: " + id);
}

Scenario parse_scenario(const json& j) {
  Scenario sc;
  if (j.contains("id")) sc.id = j["id"].is_string()
                                    ? j["id"].get<std::string>()
                                    : j["id"].dump();
  if (!j.contains("initial_condition_range") ||
      !j["initial_condition_range"].is_array() ||
      j["initial_condition_range"].size() != 2)
    fail("scenario: initial_condition_range must be [lo, hi]");
  sc.ic_lo = j["initial_condition_range"][0].get<double>();
  sc.ic_hi = j["initial_condition_range"][1].get<double>();
  sc.randomness_level = num(j, "randomness_level", 0.0);
  sc.disturbance_level = num(j, "disturbance_level", 0.0);
  sc.param_uncertainty = num(j, "param_uncertainty", 0.0);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return sc;
}

BackendConfig parse_backend(const json& j) {
  BackendConfig b;
  if (j.is_string()) {
    b.kind = j.get<std::string>();
    return b;
  }
  if (!j.is_object()) fail("agent backend must be a string or object");
  b.kind = j.value("backend", std::string("heuristic"));
  if (b.kind == "live") {
    if (!j.contains("endpoint") || !j["endpoint"].is_object())
      fail("live backend requires an endpoint object");
    const auto& e = j["endpoint"];
    b.endpoint.base_url = e.value("base_url", std::string{});
    b.endpoint.model = e.value("model", std::string{});
    b.endpoint.api_key_env =
        e.value("api_key_env", std::string("OPENAI_API_KEY"));
    b.endpoint.timeout_s = num(e, "timeout_s", 60.0);
    b.endpoint.max_retries = static_cast<int>(num(e, "max_retries", 3));
    b.endpoint.temperature = num(e, "temperature", 0.0);
    b.endpoint.backoff_base_s = num(e, "backoff_base_s", 1.0);
    try {
      b.endpoint.validate();
    } catch (const ConfigError&) {
      throw;
    }
  } else if (b.kind == "replay") {
    b.transcript = j.value("transcript", std::string{});
    if (b.transcript.empty()) fail("replay backend requires a transcript path");
  } else if (b.kind != "heuristic") {
    fail("unknown backend kind: " + b.kind);
  }
  return b;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) fail("configuration is not valid JSON");
  if (!j.is_object()) fail("configuration root must be an object");

  RunConfig cfg;
  cfg.plant_id = j.value("plant", std::string("dc_motor"));
  cfg.plant = build_plant(cfg.plant_id, j.value("plant_params", json::object()));

  if (j.contains("controllers")) {
    if (!j["controllers"].is_array() || j["controllers"].empty())
      fail("controllers must be a non-empty array");
    cfg.controllers.clear();
    for (const auto& c : j["controllers"]) {
      try {
        cfg.controllers.push_back(
            controller_kind_from_string(c.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    }
  }

  if (j.contains("scenarios")) {
    if (j["scenarios"].is_string() && j["scenarios"] == "agent") {
      cfg.agent_scenarist = true;
    } else if (j["scenarios"].is_array()) {
      for (const auto& s : j["scenarios"])
        cfg.scenarios.push_back(parse_scenario(s));
    } else {
      fail("scenarios must be an array or \"agent\"");
    }
  }
  cfg.agent_selector = j.value("agent_selector", false);
  cfg.agent_scenarist = j.value("agent_scenarist", cfg.agent_scenarist);

  if (j.contains("targets")) {
    const auto& t = j["targets"];
    cfg.settings.targets.mse = num(t, "mse", 0.9);
    cfg.settings.targets.settling_time = num(t, "settling_time", 3.0);
    cfg.settings.targets.overshoot = num(t, "overshoot", 10.0);
  }
  cfg.settings.max_iterations =
      static_cast<int>(num(j, "max_iterations", 30));
  cfg.settings.min_iterations =
      static_cast<int>(num(j, "min_iterations", 6));
  cfg.settings.reconsideration_cap =
      static_cast<int>(num(j, "reconsideration_cap", 10));
  cfg.settings.consecutive_failure_cap =
      static_cast<int>(num(j, "consecutive_failure_cap", 3));
  if (cfg.settings.max_iterations < 1) fail("max_iterations must be >= 1");

  if (j.contains("composite_weights")) {
    const auto& w = j["composite_weights"];
    cfg.settings.composite_weights.mse = num(w, "mse", 1.0);
    cfg.settings.composite_weights.overshoot = num(w, "overshoot", 1.0);
    cfg.settings.composite_weights.settling_time =
        num(w, "settling_time", 1.0);
  }
  if (j.contains("heuristic")) {
    const auto& h = j["heuristic"];
    auto& hc = cfg.settings.heuristic;
    hc.explore_fraction = num(h, "explore_fraction", hc.explore_fraction);
    hc.boundary_band_fraction =
        num(h, "boundary_band_fraction", hc.boundary_band_fraction);
    hc.exploit_step_fraction =
        num(h, "exploit_step_fraction", hc.exploit_step_fraction);
    hc.juror_boundary_fraction =
        num(h, "juror_boundary_fraction", hc.juror_boundary_fraction);
    hc.juror_stability_threshold =
        num(h, "juror_stability_threshold", hc.juror_stability_threshold);
    hc.juror_shrink = num(h, "juror_shrink", hc.juror_shrink);
    hc.zc_success_limit =
        static_cast<int>(num(h, "zc_success_limit", hc.zc_success_limit));
    hc.czc_noisy_limit =
        static_cast<int>(num(h, "czc_noisy_limit", hc.czc_noisy_limit));
  }

  cfg.sim = default_sim(cfg.plant.id());
  if (j.contains("sim")) {
    const auto& s = j["sim"];
    cfg.sim.dt = num(s, "dt", cfg.sim.dt);
    cfg.sim.horizon = num(s, "horizon", cfg.sim.horizon);
    cfg.sim_overridden = true;
    try {
      cfg.sim.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  if (j.contains("agents")) {
    if (!j["agents"].is_object()) fail("agents must be an object");
    BackendConfig def;
    if (j["agents"].contains("default"))
      def = parse_backend(j["agents"]["default"]);
    for (auto role : {AgentRole::Selector, AgentRole::Scenarist,
                      AgentRole::Actor, AgentRole::Critic,
                      AgentRole::Terminator, AgentRole::Juror}) {
      const auto key = to_string(role);
      cfg.agents[role] = j["agents"].contains(key)
                             ? parse_backend(j["agents"][key])
                             : def;
    }
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty())
      fail("seeds must be a non-empty array");
    cfg.seeds.clear();
    for (const auto& s : j["seeds"])
      cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.out_dir = j.value("out_dir", std::string("runs"));
  cfg.prompt_dir = j.value("prompt_dir", std::string{});

  if (j.contains("methods")) {
    if (!j["methods"].is_array()) fail("methods must be an array");
    for (const auto& m : j["methods"]) {
      MethodSpec spec;
      spec.name = m.value("name", std::string{});
      try {
        spec.kind = controller_kind_from_string(
            m.value("type", std::string("FSF")));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      if (!m.contains("gains") || !m["gains"].is_object())
        fail("method requires a gains object");
      for (const auto& [name, value] : m["gains"].items())
        spec.gains[name] = value.get<double>();
      if (spec.name.empty()) spec.name = to_string(spec.kind);
      cfg.methods.push_back(spec);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

AgentBinding build_binding(const RunConfig& config, std::uint64_t seed) {
  AgentBinding binding;
  std::map<std::string, std::shared_ptr<ReplayBackend>> replays;
  for (auto role : {AgentRole::Selector, AgentRole::Scenarist, AgentRole::Actor,
                    AgentRole::Critic, AgentRole::Terminator, AgentRole::Juror}) {
    BackendConfig bc;
    auto it = config.agents.find(role);
    if (it != config.agents.end()) bc = it->second;
    if (bc.kind == "heuristic") {
      binding.backends[role] =
          std::make_shared<HeuristicBackend>(seed, config.settings.heuristic);
    } else if (bc.kind == "live") {
      binding.backends[role] = std::make_shared<LiveBackend>(bc.endpoint);
    } else {
      auto& replay = replays[bc.transcript];
      if (!replay) replay = std::make_shared<ReplayBackend>(bc.transcript);
      binding.backends[role] = replay;
    }
  }
  binding.validate();
  return binding;
}

RunState build_state(const RunConfig& config, std::uint64_t seed) {
  RunState state(config.plant);
  state.seed = seed;
  state.settings = config.settings;
  if (config.sim_overridden) state.sim = config.sim;
  state.controller_queue = config.controllers;
  if (!config.scenarios.empty()) state.scenario_ladder = config.scenarios;
  state.agent_selector = config.agent_selector;
  state.agent_scenarist = config.agent_scenarist;
  if (!config.prompt_dir.empty()) set_prompt_override_dir(config.prompt_dir);
  return state;
}

}  // namespace ctlopt
