#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctlopt/backends.hpp"
#include "ctlopt/history.hpp"
#include "ctlopt/simulator.hpp"

namespace ctlopt {

enum class LoopOutcome { Success, Redesign, BudgetExhausted };
std::string to_string(LoopOutcome o);

struct LoopSettings {
  Targets targets{0.9, 3.0, 10.0};
  int max_iterations = 30;
  int min_iterations = 6;
  int reconsideration_cap = 10;
  int consecutive_failure_cap = 3;
  CompositeWeights composite_weights;
  HeuristicConfig heuristic;
};

/// Receives orchestration events; implementations persist logs/transcripts.
class RunObserver {
public:
  virtual ~RunObserver() = default;
  virtual void on_iteration(const IterationRecord& record,
                            const std::string& log_line) {
    (void)record;
    (void)log_line;
  }
  virtual void on_agent_exchange(AgentRole role, const RenderedPrompt& prompt,
                                 const std::string& response) {
    (void)role;
    (void)prompt;
    (void)response;
  }
  virtual void on_event(const std::string& text) { (void)text; }
};

/// Mutable state of one optimization campaign over a plant.
struct RunState {
  PlantModel plant;
  SimConfig sim;
  LoopSettings settings;
  std::uint64_t seed = 0;

  std::vector<ControllerKind> controller_queue{
      ControllerKind::P, ControllerKind::PI, ControllerKind::PD,
      ControllerKind::PID, ControllerKind::FSF};
  std::vector<Scenario> scenario_ladder;
  bool agent_selector = false;   // consult the selector agent for the type
  bool agent_scenarist = false;  // consult the scenarist agent per level

  // Position within the campaign.
  int controller_index = 0;
  int scenario_index = 0;
  ControllerKind controller = ControllerKind::P;
  GainRanges ranges;         // live search box (juror-adjustable)
  GainRanges global_limits;  // the controller's default box

  // Per-(controller, scenario) records. loop_records carries at most one row
  // across a range reconsideration; best attempts persist for the scenario.
  std::vector<IterationRecord> loop_records;
  std::vector<IterationRecord> best_records;  // ranked, capped at 2
  SharedBuffer scenario_history;              // append-only, for reporting
  std::optional<CriticFeedback> last_feedback;
  int reconsiderations = 0;
  int loop_iteration = 0;

  explicit RunState(PlantModel p) : plant(std::move(p)) {
    sim = default_sim(plant.id());
    scenario_ladder = default_scenario_ladder(plant);
  }
};

struct ScenarioOutcome {
  std::string scenario_id;
  std::string controller;
  std::map<std::string, double> best_gains;
  TrajectoryMetrics best_metrics;
  bool success = false;
  int iterations_used = 0;
  int reconsiderations = 0;
};

struct FinalReport {
  std::string plant;
  int scenario_count = 0;
  int scenarios_completed = 0;
  bool all_completed = false;
  std::vector<ScenarioOutcome> scenarios;

  std::string summary() const;
};

/// One actor-critic inner loop on the current controller/scenario, ending on
/// a terminator verdict or the iteration cap.
LoopOutcome run_inner_loop(RunState& state, const AgentBinding& binding,
                           RunObserver& observer);

/// Full campaign: scenario ladder progression, juror-driven range
/// reconsideration, and controller switching.
FinalReport run_campaign(RunState& state, const AgentBinding& binding,
                         RunObserver& observer);

/// Compact per-iteration run-log line (#k/N | Type:... | MSE:... | ...).
std::string render_log_line(int iteration, int max_iterations,
                            ControllerKind kind,
                            const std::vector<std::string>& gain_order,
                            const std::map<std::string, double>& gains,
                            const TrajectoryMetrics& m);

}  // namespace ctlopt
