#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ctlopt/plants.hpp"

namespace ctlopt {

enum class ControllerKind { P, PI, PD, PID, FSF };

ControllerKind controller_kind_from_string(const std::string& s);
std::string to_string(ControllerKind k);

using GainRange = std::array<double, 2>;  // [min, max]
using GainRanges = std::map<std::string, GainRange>;

/// Canonical gain names for a controller family. FSF gain count follows the
/// plant: one gain per fed-back state (the pendulum feeds back theta and a
/// filtered theta-derivative, so it uses two).
std::vector<std::string> gain_names(ControllerKind kind,
                                    const PlantModel& plant);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::P;
  std::map<std::string, double> gains;
  GainRanges ranges;

  double gain(const std::string& name) const;
};

/// Discrete-time realization state. Zeroed at episode start; the integral is
/// bounded by the anti-windup clamp.
struct ControllerState {
  double integral = 0.0;       // accumulated error * s
  double deriv_filtered = 0.0; // filtered derivative estimate
  double prev_input = 0.0;     // previous sample of the differentiated signal
  bool has_prev = false;
};

ControllerState reset(const ControllerSpec& spec);

/// Evaluates the control law for one step from a (possibly noisy) state
/// measurement. Returns the raw (pre-saturation) control and the updated
/// controller state. dt must be positive.
std::pair<double, ControllerState> control_output(const ControllerSpec& spec,
                                                  const ControllerState& cstate,
                                                  const StateVec& measurement,
                                                  double reference, double dt,
                                                  const PlantModel& plant);

/// Logged per-system default search ranges.
GainRanges default_ranges(ControllerKind kind, const PlantModel& plant);

/// Cutoff (rad/s) of the first-order filtered derivative used by PD/PID and
/// by the pendulum FSF velocity channel.
inline constexpr double kDerivativeFilterCutoff = 50.0;

}  // namespace ctlopt
