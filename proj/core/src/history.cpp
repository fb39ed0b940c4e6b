#include "ctlopt/history.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctlopt {

namespace {

double percent_change(double first, double last) {
  if (first == 0.0) return 0.0;  // degenerate guard
  return 100.0 * (first - last) / first;
}

}  // namespace

ImprovementReport improvement_analysis(
    const std::vector<IterationRecord>& window) {
  if (window.size() < 2)
    throw std::invalid_argument("improvement_analysis: window size < 2");
  ImprovementReport r;
  r.mse_change = percent_change(window.front().metrics.mse,
                                window.back().metrics.mse);
  r.settling_time_change = percent_change(
      window.front().metrics.settling_time, window.back().metrics.settling_time);
  r.overshoot_change = percent_change(window.front().metrics.overshoot,
                                      window.back().metrics.overshoot);
  r.iterations_analyzed = static_cast<int>(window.size());
  return r;
}

ConvergenceReport convergence_analysis(
    const std::vector<IterationRecord>& window) {
  if (window.size() < 2)
    throw std::invalid_argument("convergence_analysis: window size < 2");
  ConvergenceReport r;
  r.iterations_analyzed = static_cast<int>(window.size());
  for (const auto& [name, unused] : window.front().gains) {
    double acc = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i + 1 < window.size(); ++i) {
      const auto prev_it = window[i].gains.find(name);
      const auto next_it = window[i + 1].gains.find(name);
      if (prev_it == window[i].gains.end() ||
          next_it == window[i + 1].gains.end())
        continue;
      const double prev = prev_it->second;
      if (prev == 0.0) continue;  // degenerate guard
      acc += 100.0 * std::abs(next_it->second - prev) / std::abs(prev);
      ++pairs;
    }
    const double mean = (pairs > 0) ? acc / pairs : 0.0;
    r.parameter_changes[name] = mean;
    r.max_change_percent = std::max(r.max_change_percent, mean);
  }
  r.converged = r.max_change_percent <= kConvergenceThresholdPercent;
  return r;
}

std::map<std::string, ParamStats> parameter_statistics(
    const std::vector<IterationRecord>& records) {
  std::map<std::string, ParamStats> out;
  if (records.empty()) return out;
  for (const auto& [name, unused] : records.front().gains) {
    double mn = kInf, mx = -kInf, sum = 0.0, sq = 0.0;
    int n = 0;
    for (const auto& rec : records) {
      auto it = rec.gains.find(name);
      if (it == rec.gains.end()) continue;
      mn = std::min(mn, it->second);
      mx = std::max(mx, it->second);
      sum += it->second;
      sq += it->second * it->second;
      ++n;
    }
    if (n == 0) continue;
    ParamStats s;
    s.min = mn;
    s.max = mx;
    s.mean = sum / n;
    s.std_dev = std::sqrt(std::max(0.0, sq / n - s.mean * s.mean));
    out[name] = s;
  }
  return out;
}

double stability_rate(const std::vector<IterationRecord>& records) {
  if (records.empty()) return 0.0;
  const auto stable = std::count_if(records.begin(), records.end(),
                                    [](const auto& r) { return r.metrics.stable; });
  return static_cast<double>(stable) / static_cast<double>(records.size());
}

double composite_score(const TrajectoryMetrics& m, const Targets& targets,
                       const CompositeWeights& w) {
  if (!m.stable) return kInf;
  if (!std::isfinite(m.mse) || !std::isfinite(m.settling_time) ||
      !std::isfinite(m.overshoot))
    return kInf;
  return w.mse * m.mse / targets.mse + w.overshoot * m.overshoot / targets.overshoot +
         w.settling_time * m.settling_time / targets.settling_time;
}

std::vector<IterationRecord> SharedBuffer::window(std::size_t limit) const {
  const std::size_t n = std::min(limit, records_.size());
  return {records_.end() - static_cast<std::ptrdiff_t>(n), records_.end()};
}

std::vector<IterationRecord> SharedBuffer::best_attempts(std::size_t k) const {
  std::vector<IterationRecord> sorted = records_;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const IterationRecord& a, const IterationRecord& b) {
                     if (a.metrics.stable != b.metrics.stable)
                       return a.metrics.stable;
                     if (a.metrics.mse != b.metrics.mse)
                       return a.metrics.mse < b.metrics.mse;
                     return a.metrics.settling_time < b.metrics.settling_time;
                   });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

}  // namespace ctlopt
