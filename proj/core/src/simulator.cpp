#include "ctlopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ctlopt {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("sim: dt must be > 0");
  if (horizon < 10.0 * dt)
    throw std::invalid_argument("sim: horizon must be >= 10*dt");
  const double ratio = horizon / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw std::invalid_argument("sim: horizon must be a multiple of dt");
}

int SimConfig::steps() const {
  return static_cast<int>(std::llround(horizon / dt));
}

SimConfig default_sim(PlantId id) {
  // dt calibrated against the reference run-log values; horizons sized so the
  // logged MSE magnitudes come out at the logged initial conditions.
  switch (id) {
    case PlantId::DcMotor: return {0.02, 10.0};
    case PlantId::BallBeam: return {0.02, 20.0};
    case PlantId::Pendulum: return {0.02, 5.0};
    case PlantId::DoublePendulum: return {0.02, 10.0};
  }
  return {};
}

StateVec integrate_step(const PlantModel& plant, const StateVec& state,
                        double u, double dt) {
  const StateVec k1 = plant.derivative(state, u);
  const StateVec k2 = plant.derivative(state + 0.5 * dt * k1, u);
  const StateVec k3 = plant.derivative(state + 0.5 * dt * k2, u);
  const StateVec k4 = plant.derivative(state + dt * k3, u);
  return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

bool out_of_bounds(const StateVec& x) {
  for (int i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceBound) return true;
  }
  return false;
}

}  // namespace

Trajectory run_episode(const PlantModel& plant, const ControllerSpec& spec,
                       const Scenario& scenario, const SimConfig& sim,
                       std::uint64_t seed, double reference) {
  sim.validate();
  const int steps = sim.steps();
  const int n = plant.state_dim();

  const EpisodeDraw draw(scenario, plant, seed);
  const PlantModel live_plant = plant.perturbed(draw.param_multipliers());

  Trajectory traj;
  traj.reference = reference;
  traj.t.resize(steps + 1);
  traj.u.resize(steps + 1);
  traj.e.resize(steps + 1);
  traj.states.resize(steps + 1, n);

  StateVec x = draw.initial_state(plant);
  ControllerState cs = reset(spec);
  const double limit = live_plant.input_limit();

  double last_u = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * sim.dt;
    traj.t[i] = t;
    traj.states.row(i) = x.transpose();
    traj.e[i] = reference - x[plant.regulated_index()];

    if (traj.diverged) {
      traj.u[i] = last_u;
      continue;
    }
    if (out_of_bounds(x)) {
      traj.diverged = true;
      traj.u[i] = last_u;
      // Freeze the remaining samples at the last valid value.
      for (int k = i + 1; k <= steps; ++k) {
        traj.t[k] = k * sim.dt;
        traj.states.row(k) = traj.states.row(i);
        traj.e[k] = traj.e[i];
        traj.u[k] = last_u;
      }
      break;
    }
    if (i == steps) {
      traj.u[i] = last_u;
      break;
    }

    const StateVec measured = draw.measurement_noise(i, x);
    auto [u_raw, cs_next] =
        control_output(spec, cs, measured, reference, sim.dt, live_plant);
    cs = cs_next;
    const double u_sat = live_plant.saturate(u_raw);
    traj.u[i] = u_sat;
    last_u = u_sat;

    // Disturbance models an external input that the actuator limit does not
    // bound; the combined input is clipped at twice the limit.
    const double u_eff = std::clamp(u_sat + draw.actuator_disturbance(t),
                                    -2.0 * limit, 2.0 * limit);

    StateVec x_next;
    bool ok = true;
    try {
      x_next = integrate_step(live_plant, x, u_eff, sim.dt);
    } catch (const std::domain_error&) {
      ok = false;
    }
    if (!ok || !x_next.allFinite()) {
      traj.diverged = true;
      for (int k = i + 1; k <= steps; ++k) {
        traj.t[k] = k * sim.dt;
        traj.states.row(k) = traj.states.row(i);
        traj.e[k] = traj.e[i];
        traj.u[k] = last_u;
      }
      break;
    }
    x = x_next;
  }
  return traj;
}

void write_trajectory_csv(std::ostream& os, const PlantModel& plant,
                          const Trajectory& traj) {
  os << "t";
  for (const auto& name : plant.state_names()) os << "," << name;
  os << ",u,e\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    os << traj.t[i];
    for (int j = 0; j < traj.states.cols(); ++j)
      os << "," << traj.states(static_cast<Eigen::Index>(i), j);
    os << "," << traj.u[i] << "," << traj.e[i] << "\n";
  }
}

}  // namespace ctlopt
