#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ctlopt/controllers.hpp"
#include "ctlopt/plants.hpp"
#include "ctlopt/scenario.hpp"

namespace ctlopt {

/// Fixed-step RK4 closed-loop simulation settings.
struct SimConfig {
  double dt = 0.01;      // s
  double horizon = 10.0; // s; must be an integral multiple of dt, >= 10*dt

  void validate() const;
  int steps() const;
};

/// Per-plant defaults calibrated against the reference runs.
SimConfig default_sim(PlantId id);

/// Any state component beyond this magnitude marks the episode diverged;
/// integration halts and the remaining samples hold the last value.
inline constexpr double kDivergenceBound = 1e6;

struct Trajectory {
  std::vector<double> t;  // time grid, steps + 1 points
  std::vector<double> u;  // control after saturation (before disturbance)
  std::vector<double> e;  // true error: reference - regulated output
  Eigen::MatrixXd states; // (steps + 1) x n
  double reference = 0.0;
  bool diverged = false;
};

/// One fourth-order Runge-Kutta step with u held constant.
StateVec integrate_step(const PlantModel& plant, const StateVec& state,
                        double u_effective, double dt);

/// Closes the loop over the horizon: scenario-perturbed plant, controller
/// update once per step from the noisy measurement (zero-order hold across
/// RK4 substeps), actuator saturation, then additive disturbance clipped at
/// twice the actuator limit. Never throws on divergence; sets the flag.
Trajectory run_episode(const PlantModel& plant, const ControllerSpec& spec,
                       const Scenario& scenario, const SimConfig& sim,
                       std::uint64_t seed, double reference = 0.0);

/// CSV export with columns t, states..., u, e.
void write_trajectory_csv(std::ostream& os, const PlantModel& plant,
                          const Trajectory& traj);

}  // namespace ctlopt
