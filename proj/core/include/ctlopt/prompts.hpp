#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctlopt/controllers.hpp"
#include "ctlopt/history.hpp"
#include "ctlopt/plants.hpp"
#include "ctlopt/protocol.hpp"

namespace ctlopt {

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

/// Everything a role's template may draw on. Rendering is a pure function of
/// this context.
struct PromptInputs {
  const PlantModel* plant = nullptr;
  ControllerKind controller_type = ControllerKind::P;
  GainRanges ranges;
  int iteration = 1;
  int max_iterations = 1;
  int min_iterations = 6;
  Targets targets;

  std::map<std::string, double> current_gains;
  std::optional<TrajectoryMetrics> current_metrics;
  std::vector<IterationRecord> trend_window;        // oldest first, <= 5 rows
  std::vector<IterationRecord> best_attempts;       // top 2
  std::optional<CriticFeedback> latest_feedback;
  Strategy recommended_strategy = Strategy::Explore;

  std::optional<ImprovementReport> improvement;
  std::optional<ConvergenceReport> convergence;

  // Whether the active scenario carries noise or disturbances (moves the
  // terminator's oscillation gate to control zero-crossings).
  bool noisy_scenario = false;

  // Juror context.
  GainRanges global_limits;
  std::map<std::string, ParamStats> parameter_stats;
  double stability_rate = 0.0;
  int total_iterations = 0;
  int reconsiderations = 0;

  // Selector / scenarist context.
  std::map<std::string, double> selected_parameters;
  int scenario_level = 1;
  int scenario_count = 1;
};

/// Renders the role's (system, user) prompt pair from the embedded template
/// corpus. Deterministic: identical inputs produce identical text.
RenderedPrompt render_prompt(AgentRole role, const PromptInputs& in);

/// Returns a template by name ("actor_system", ...). An override directory
/// may shadow individual embedded templates (versioned template files).
std::string prompt_template(const std::string& name);
void set_prompt_override_dir(const std::string& dir);

// Number renderers shared by prompts and reports.
std::string fmt_fixed(double v, int decimals);   // "inf" aware
std::string fmt_trimmed(double v);               // %.4f with zeros trimmed

}  // namespace ctlopt
