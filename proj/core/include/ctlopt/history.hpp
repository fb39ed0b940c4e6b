#pragma once

#include <map>
#include <string>
#include <vector>

#include "ctlopt/metrics.hpp"
#include "ctlopt/protocol.hpp"

namespace ctlopt {

/// One loop iteration: the unit stored in the shared buffer.
struct IterationRecord {
  int iteration = 0;  // 1-based index within the current loop
  std::map<std::string, double> gains;
  TrajectoryMetrics metrics;
  std::string critic_strategy;      // EXPLORE | EXPLOIT
  std::string terminator_decision;  // may be empty until decided
  std::vector<std::string> clamp_warnings;
  double wall_time_s = 0.0;
};

struct ImprovementReport {
  double mse_change = 0.0;            // 100*(first-last)/first; + = improved
  double settling_time_change = 0.0;
  double overshoot_change = 0.0;
  int iterations_analyzed = 0;
};

struct ConvergenceReport {
  std::map<std::string, double> parameter_changes;  // mean step %, per gain
  double max_change_percent = 0.0;
  bool converged = false;
  int iterations_analyzed = 0;
};

struct ParamStats {
  double min = 0.0, max = 0.0, mean = 0.0, std_dev = 0.0;
};

/// Percentage change of each trend metric over the window (first vs last).
/// Windows shorter than 2 rows are a precondition violation.
ImprovementReport improvement_analysis(
    const std::vector<IterationRecord>& window);

/// Mean consecutive-step percentage change per gain; converged when the
/// largest is at most 5%.
ConvergenceReport convergence_analysis(
    const std::vector<IterationRecord>& window);

inline constexpr double kConvergenceThresholdPercent = 5.0;

/// Per-gain proposal statistics plus the stable fraction over the records.
std::map<std::string, ParamStats> parameter_statistics(
    const std::vector<IterationRecord>& records);
double stability_rate(const std::vector<IterationRecord>& records);

struct CompositeWeights {
  double mse = 1.0, overshoot = 1.0, settling_time = 1.0;
};

/// Weighted sum of metric/target ratios; +inf for unstable or non-finite
/// metrics; lower is better.
double composite_score(const TrajectoryMetrics& m, const Targets& targets,
                       const CompositeWeights& w = {});

/// Append-only store of iteration records shared across a tuning run.
class SharedBuffer {
public:
  void append(IterationRecord rec) { records_.push_back(std::move(rec)); }
  void clear() { records_.clear(); }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const std::vector<IterationRecord>& all() const { return records_; }
  const IterationRecord& back() const { return records_.back(); }
  IterationRecord& back() { return records_.back(); }

  /// The most recent min(limit, size) records, oldest first.
  std::vector<IterationRecord> window(std::size_t limit) const;

  /// Best attempts: stable runs first, then by MSE, then settling time.
  std::vector<IterationRecord> best_attempts(std::size_t k) const;

private:
  std::vector<IterationRecord> records_;
};

/// Buffer windows rendered to agents cover at most this many records.
inline constexpr std::size_t kTrendWindow = 5;

}  // namespace ctlopt
