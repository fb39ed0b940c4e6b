#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctlopt/plants.hpp"

namespace ctlopt {

/// One robustness scenario: initial-condition range for the regulated state,
/// measurement-noise level, actuator-disturbance level, and parametric
/// uncertainty fraction.
struct Scenario {
  std::string id;
  double ic_lo = 0.0;
  double ic_hi = 0.0;
  double randomness_level = 0.0;   // measurement noise std, state units
  double disturbance_level = 0.0;  // actuator units
  double param_uncertainty = 0.0;  // dimensionless fraction in [0, 1)

  void validate() const;
};

/// Fully determined realization of a scenario for one episode. All stochastic
/// values are pure functions of (scenario, seed), so episodes replay exactly.
class EpisodeDraw {
public:
  EpisodeDraw(const Scenario& scenario, const PlantModel& plant,
              std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  double initial_value() const { return initial_value_; }
  const std::vector<double>& param_multipliers() const {
    return param_multipliers_;
  }

  /// Initial state: regulated component set to the drawn value, rest zero.
  StateVec initial_state(const PlantModel& plant) const;

  /// state + N(0, sigma^2) i.i.d. per step per channel. Identity when the
  /// scenario's randomness level is zero.
  StateVec measurement_noise(int step, const StateVec& state) const;

  /// Piecewise-constant actuator disturbance, resampled every second,
  /// each level ~ Uniform(-level, +level).
  double actuator_disturbance(double t) const;

private:
  std::uint64_t seed_ = 0;
  double noise_std_ = 0.0;
  double disturbance_level_ = 0.0;
  double initial_value_ = 0.0;
  int regulated_index_ = 0;
  int state_dim_ = 0;
  std::vector<double> param_multipliers_;
};

/// Hold interval of the piecewise-constant disturbance signal (seconds).
inline constexpr double kDisturbanceHold = 1.0;

/// Default regulated-state initial condition per plant (pi for the angular
/// plants, 1 m for the ball position), matching the reference runs.
double default_initial_condition(const PlantModel& plant);

/// Default three-level ladder: nominal, noise + disturbance, parametric
/// uncertainty. Noise std 0.01, disturbance 20% of the input limit, and a
/// 20% parameter uncertainty fraction.
std::vector<Scenario> default_scenario_ladder(const PlantModel& plant);

}  // namespace ctlopt
