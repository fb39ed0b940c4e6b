#include "ctlopt/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctlopt {

ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "P") return ControllerKind::P;
  if (s == "PI") return ControllerKind::PI;
  if (s == "PD") return ControllerKind::PD;
  if (s == "PID") return ControllerKind::PID;
  if (s == "FSF") return ControllerKind::FSF;
  throw std::invalid_argument("unknown controller type: " + s);
}

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::P: return "P";
    case ControllerKind::PI: return "PI";
    case ControllerKind::PD: return "PD";
    case ControllerKind::PID: return "PID";
    case ControllerKind::FSF: return "FSF";
  }
  return "?";
}

int fsf_gain_count(const PlantModel& plant) {
  // The pendulum FSF acts on theta and a filtered theta-derivative estimate.
  if (plant.id() == PlantId::Pendulum) return 2;
  return plant.state_dim();
}

std::vector<std::string> gain_names(ControllerKind kind,
                                    const PlantModel& plant) {
  switch (kind) {
    case ControllerKind::P: return {"Kp"};
    case ControllerKind::PI: return {"Kp", "Ki"};
    case ControllerKind::PD: return {"Kp", "Kd"};
    case ControllerKind::PID: return {"Kp", "Ki", "Kd"};
    case ControllerKind::FSF: {
      std::vector<std::string> names;
      for (int i = 1; i <= fsf_gain_count(plant); ++i)
        names.push_back("K" + std::to_string(i));
      return names;
    }
  }
  return {};
}

double ControllerSpec::gain(const std::string& name) const {
  auto it = gains.find(name);
  if (it == gains.end())
    throw std::invalid_argument("controller gain missing: " + name);
  return it->second;
}

ControllerState reset(const ControllerSpec&) { return ControllerState{}; }

namespace {

// Backward-Euler step of the dirty derivative N*s/(s+N).
double filtered_derivative(ControllerState& cs, double input, double dt) {
  if (!cs.has_prev) {
    cs.prev_input = input;
    cs.has_prev = true;
  }
  const double n = kDerivativeFilterCutoff;
  cs.deriv_filtered = (cs.deriv_filtered + n * (input - cs.prev_input)) /
                      (1.0 + n * dt);
  cs.prev_input = input;
  return cs.deriv_filtered;
}

}  // namespace

std::pair<double, ControllerState> control_output(const ControllerSpec& spec,
                                                  const ControllerState& cstate,
                                                  const StateVec& measurement,
                                                  double reference, double dt,
                                                  const PlantModel& plant) {
  if (dt <= 0.0) throw std::invalid_argument("control_output: dt must be > 0");
  if (measurement.size() != plant.state_dim())
    throw std::invalid_argument("control_output: measurement dimension");

  ControllerState cs = cstate;

  if (spec.kind == ControllerKind::FSF) {
    double u = 0.0;
    if (plant.id() == PlantId::Pendulum) {
      const double theta = measurement[0];
      u = -spec.gain("K1") * theta -
          spec.gain("K2") * filtered_derivative(cs, theta, dt);
    } else {
      for (int i = 0; i < plant.state_dim(); ++i)
        u -= spec.gain("K" + std::to_string(i + 1)) * measurement[i];
    }
    return {u, cs};
  }

  const double error = reference - measurement[plant.regulated_index()];
  double u = spec.gain("Kp") * error;

  if (spec.kind == ControllerKind::PI || spec.kind == ControllerKind::PID) {
    const double ki = spec.gain("Ki");
    cs.integral += error * dt;
    if (ki > 0.0) {
      // Anti-windup: Ki * integral never exceeds twice the actuator limit.
      const double bound = 2.0 * plant.input_limit() / ki;
      cs.integral = std::clamp(cs.integral, -bound, bound);
    }
    u += ki * cs.integral;
  }
  if (spec.kind == ControllerKind::PD || spec.kind == ControllerKind::PID) {
    u += spec.gain("Kd") * filtered_derivative(cs, error, dt);
  }
  return {u, cs};
}

GainRanges default_ranges(ControllerKind kind, const PlantModel& plant) {
  switch (plant.id()) {
    case PlantId::DcMotor:
      switch (kind) {
        case ControllerKind::P: return {{"Kp", {10.0, 60.0}}};
        case ControllerKind::PI:
          return {{"Kp", {10.0, 60.0}}, {"Ki", {0.01, 15.0}}};
        case ControllerKind::PD:
          return {{"Kp", {10.0, 60.0}}, {"Kd", {0.01, 15.0}}};
        case ControllerKind::PID:
          return {{"Kp", {10.0, 60.0}},
                  {"Ki", {0.01, 20.0}},
                  {"Kd", {0.01, 30.0}}};
        case ControllerKind::FSF:
          return {{"K1", {0.01, 10.0}},
                  {"K2", {0.01, 100.0}},
                  {"K3", {0.01, 200.0}}};
      }
      break;
    case PlantId::BallBeam:
      switch (kind) {
        case ControllerKind::P: return {{"Kp", {0.01, 100.0}}};
        case ControllerKind::PI:
          return {{"Kp", {0.01, 100.0}}, {"Ki", {0.01, 50.0}}};
        case ControllerKind::PD:
          return {{"Kp", {0.01, 100.0}}, {"Kd", {0.01, 50.0}}};
        case ControllerKind::PID:
          return {{"Kp", {0.01, 100.0}},
                  {"Ki", {0.01, 50.0}},
                  {"Kd", {0.01, 50.0}}};
        case ControllerKind::FSF:
          return {{"K1", {0.01, 12.495}},
                  {"K2", {0.01, 19.495}},
                  {"K3", {0.01, 69.995}},
                  {"K4", {0.01, 13.495}}};
      }
      break;
    case PlantId::Pendulum:
      switch (kind) {
        case ControllerKind::P: return {{"Kp", {2.0, 10.0}}};
        case ControllerKind::PI:
          return {{"Kp", {2.0, 10.0}}, {"Ki", {0.5, 3.0}}};
        case ControllerKind::PD:
          return {{"Kp", {2.0, 10.0}}, {"Kd", {0.05, 1.0}}};
        case ControllerKind::PID:
          return {{"Kp", {2.0, 10.0}},
                  {"Ki", {0.5, 3.0}},
                  {"Kd", {0.05, 1.0}}};
        case ControllerKind::FSF:
          return {{"K1", {1.0, 15.0}}, {"K2", {0.1, 2.0}}};
      }
      break;
    case PlantId::DoublePendulum:
      switch (kind) {
        case ControllerKind::P: return {{"Kp", {0.01, 20.0}}};
        case ControllerKind::PI:
          return {{"Kp", {0.01, 20.0}}, {"Ki", {0.01, 10.0}}};
        case ControllerKind::PD:
          return {{"Kp", {0.01, 20.0}}, {"Kd", {0.01, 10.0}}};
        case ControllerKind::PID:
          return {{"Kp", {0.01, 20.0}},
                  {"Ki", {0.01, 10.0}},
                  {"Kd", {0.01, 10.0}}};
        case ControllerKind::FSF:
          return {{"K1", {0.005, 1.0}},
                  {"K2", {5.0, 20.0}},
                  {"K3", {0.5, 3.0}},
                  {"K4", {1.0, 3.0}}};
      }
      break;
  }
  throw std::invalid_argument("no default ranges for this controller/plant");
}

}  // namespace ctlopt
