#pragma once

#include <limits>
#include <string>

#include "ctlopt/simulator.hpp"

namespace ctlopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// The eight-quantity performance record of one closed-loop episode.
struct TrajectoryMetrics {
  double mse = 0.0;            // mean of e_i^2 over all samples
  double settling_time = kInf; // s; first time |e| stays within the 2% band
  double rise_time = kInf;     // s; first time |e| <= 10% of |e(0)|
  double overshoot = 0.0;      // % of initial error magnitude past reference
  int zero_crossings = 0;      // sign changes of e
  int control_zero_crossings = 0; // sign changes of u
  double control_effort = 0.0;    // trapezoidal integral of |u| dt
  bool stable = false;
  double ss_error = 0.0;       // mean |e| over the final 5% of the horizon
};

/// Bands are relative to |e(0)|; when |e(0)| < 1e-9 an absolute floor of
/// 0.02 is used instead.
inline constexpr double kSettlingBandFraction = 0.02;
inline constexpr double kRiseBandFraction = 0.10;
inline constexpr double kBandFloor = 0.02;

TrajectoryMetrics compute_metrics(const Trajectory& traj);

struct Targets {
  double mse = 0.0;
  double settling_time = 0.0;
  double overshoot = 0.0;  // percent
};

struct TargetCheck {
  bool mse = false;
  bool settling_time = false;
  bool overshoot = false;
  bool stable = false;

  bool all() const { return mse && settling_time && overshoot && stable; }
};

/// Compares each metric against its target (<=); stability must also hold.
TargetCheck meets_targets(const TrajectoryMetrics& m, const Targets& targets);

/// Renders a value with fixed decimals, or "inf" for infinities, matching the
/// run-log convention (e.g. "Ts:inf").
std::string format_metric(double value, int decimals);

}  // namespace ctlopt
