#include "ctlopt/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ctlopt {

namespace {

int count_sign_changes(const std::vector<double>& v) {
  int count = 0;
  int last_sign = 0;
  for (double x : v) {
    const int s = (x > 0.0) - (x < 0.0);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) ++count;
    last_sign = s;
  }
  return count;
}

}  // namespace

TrajectoryMetrics compute_metrics(const Trajectory& traj) {
  const auto& e = traj.e;
  const auto& u = traj.u;
  const auto& t = traj.t;
  if (e.empty()) throw std::invalid_argument("compute_metrics: empty trajectory");

  TrajectoryMetrics m;
  const std::size_t n = e.size();

  double sq = 0.0;
  for (double ei : e) sq += ei * ei;
  m.mse = sq / static_cast<double>(n);

  const double e0 = e.front();
  const double e0_mag = std::abs(e0);
  const double scale = (e0_mag < 1e-9) ? kBandFloor : e0_mag;
  const double settle_band =
      (e0_mag < 1e-9) ? kBandFloor : kSettlingBandFraction * e0_mag;
  const double rise_band =
      (e0_mag < 1e-9) ? kBandFloor : kRiseBandFraction * e0_mag;

  // Settling: first time after which the error stays inside the band forever.
  std::size_t last_outside = n;  // n means "never outside"
  for (std::size_t i = n; i-- > 0;) {
    if (std::abs(e[i]) > settle_band) {
      last_outside = i;
      break;
    }
  }
  if (last_outside == n) {
    m.settling_time = 0.0;
  } else if (last_outside + 1 < n) {
    m.settling_time = t[last_outside + 1];
  }  // else never settles: stays +inf

  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(e[i]) <= rise_band) {
      m.rise_time = t[i];
      break;
    }
  }

  // Overshoot: excursion past the reference, as % of the initial error.
  const double sign0 = (e0 >= 0.0) ? 1.0 : -1.0;
  double min_aligned = 0.0;
  for (double ei : e) min_aligned = std::min(min_aligned, ei * sign0);
  m.overshoot = 100.0 * std::max(0.0, -min_aligned) / scale;

  m.zero_crossings = count_sign_changes(e);
  m.control_zero_crossings = count_sign_changes(u);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    m.control_effort +=
        0.5 * (std::abs(u[i]) + std::abs(u[i + 1])) * (t[i + 1] - t[i]);
  }

  const std::size_t tail = std::max<std::size_t>(1, n / 20);
  double acc = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) acc += std::abs(e[i]);
  m.ss_error = acc / static_cast<double>(tail);

  m.stable = !traj.diverged && m.ss_error <= 0.1 * std::max(e0_mag, kBandFloor);
  return m;
}

TargetCheck meets_targets(const TrajectoryMetrics& m, const Targets& targets) {
  if (!(targets.mse > 0.0) || !(targets.settling_time > 0.0) ||
      !(targets.overshoot > 0.0))
    throw std::invalid_argument("meets_targets: targets must be positive");
  TargetCheck c;
  c.mse = m.mse <= targets.mse;
  c.settling_time = m.settling_time <= targets.settling_time;
  c.overshoot = m.overshoot <= targets.overshoot;
  c.stable = m.stable;
  return c;
}

std::string format_metric(double value, int decimals) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace ctlopt
