#include "ctlopt/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace ctlopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// One scenario realization is drawn per (run, scenario level) and reused for
// every iteration, so identical gains give identical metrics within a loop.
std::uint64_t episode_seed(const RunState& state) {
  return splitmix64(state.seed ^
                    (0x5ca1ab1eull + static_cast<std::uint64_t>(
                                         state.scenario_index) * 0x9e37ull));
}

bool scenario_is_noisy(const Scenario& sc) {
  return sc.randomness_level > 0.0 || sc.disturbance_level > 0.0;
}

bool better_attempt(const IterationRecord& a, const IterationRecord& b) {
  if (a.metrics.stable != b.metrics.stable) return a.metrics.stable;
  if (a.metrics.mse != b.metrics.mse) return a.metrics.mse < b.metrics.mse;
  return a.metrics.settling_time < b.metrics.settling_time;
}

void update_best(std::vector<IterationRecord>& best,
                 const IterationRecord& rec) {
  best.push_back(rec);
  std::stable_sort(best.begin(), best.end(), better_attempt);
  if (best.size() > 2) best.resize(2);
}

PromptInputs base_inputs(const RunState& state) {
  PromptInputs in;
  in.plant = &state.plant;
  in.controller_type = state.controller;
  in.ranges = state.ranges;
  in.iteration = state.loop_iteration;
  in.max_iterations = state.settings.max_iterations;
  in.min_iterations = state.settings.min_iterations;
  in.targets = state.settings.targets;
  in.best_attempts = state.best_records;
  in.noisy_scenario =
      scenario_is_noisy(state.scenario_ladder[state.scenario_index]);
  in.global_limits = state.global_limits;
  in.scenario_level = state.scenario_index + 1;
  in.scenario_count = static_cast<int>(state.scenario_ladder.size());
  return in;
}

std::vector<IterationRecord> trend_window_rows(
    const std::vector<IterationRecord>& records, std::size_t limit) {
  const std::size_t n = std::min(limit, records.size());
  return {records.end() - static_cast<std::ptrdiff_t>(n), records.end()};
}

// Renders, queries the backend, parses; one re-prompt on a malformed reply.
template <typename Parser>
auto ask(const AgentBinding& binding, AgentRole role, const PromptInputs& in,
         RunObserver& observer, Parser parse) {
  auto& backend = binding.at(role);
  RenderedPrompt prompt = render_prompt(role, in);
  std::string raw = backend.respond(role, in, prompt);
  observer.on_agent_exchange(role, prompt, raw);
  try {
    return parse(raw);
  } catch (const ParseError&) {
    RenderedPrompt retry = prompt;
    retry.user_text +=
        "\n\nREMINDER: Your previous response could not be parsed. Respond "
        "with exactly the required JSON format and nothing else.";
    raw = backend.respond(role, in, retry);
    observer.on_agent_exchange(role, retry, raw);
    return parse(raw);
  }
}

}  // namespace

std::string to_string(LoopOutcome o) {
  switch (o) {
    case LoopOutcome::Success: return "SUCCESS";
    case LoopOutcome::Redesign: return "REDESIGN";
    case LoopOutcome::BudgetExhausted: return "BUDGET_EXHAUSTED";
  }
  return "?";
}

std::string FinalReport::summary() const {
  std::ostringstream os;
  os << "Completed " << scenarios_completed << " of " << scenario_count
     << " scenarios";
  return os.str();
}

std::string render_log_line(int iteration, int max_iterations,
                            ControllerKind kind,
                            const std::vector<std::string>& gain_order,
                            const std::map<std::string, double>& gains,
                            const TrajectoryMetrics& m) {
  std::ostringstream os;
  os << "#" << iteration << "/" << max_iterations
     << " | Type:" << to_string(kind);
  const int gain_decimals = (kind == ControllerKind::FSF) ? 2 : 3;
  for (const auto& name : gain_order) {
    auto it = gains.find(name);
    if (it == gains.end()) continue;
    os << " | " << name << ":" << fmt_fixed(it->second, gain_decimals);
  }
  os << " | MSE:" << fmt_fixed(m.mse, 4)
     << " | Ts:" << fmt_fixed(m.settling_time, 2)
     << " | Tr:" << fmt_fixed(m.rise_time, 2)
     << " | %OS:" << fmt_fixed(m.overshoot, 2)
     << " | ZC:" << m.zero_crossings
     << " | CZC:" << m.control_zero_crossings
     << " | CE:" << fmt_fixed(m.control_effort, 2)
     << " | e_ss:" << fmt_fixed(m.ss_error, 2)
     << " | isStb:" << (m.stable ? "True" : "False");
  return os.str();
}

LoopOutcome run_inner_loop(RunState& state, const AgentBinding& binding,
                           RunObserver& observer) {
  const auto& scenario = state.scenario_ladder[state.scenario_index];
  const auto names = gain_names(state.controller, state.plant);
  const HeuristicConfig& heuristics = state.settings.heuristic;
  const std::uint64_t ep_seed = episode_seed(state);

  int consecutive_failures = 0;
  for (int iter = 1; iter <= state.settings.max_iterations; ++iter) {
    state.loop_iteration = iter;
    const auto iter_start = std::chrono::steady_clock::now();
    try {
      // Actor: propose gains from ranges, history, and the last feedback.
      PromptInputs actor_in = base_inputs(state);
      actor_in.trend_window =
          trend_window_rows(state.loop_records, kTrendWindow);
      actor_in.latest_feedback = state.last_feedback;
      ActorProposal proposal =
          ask(binding, AgentRole::Actor, actor_in, observer, parse_actor);
      const auto clamp_warnings =
          clamp_to_ranges(proposal, names, state.ranges);
      for (const auto& w : clamp_warnings) observer.on_event("clamp: " + w);

      // Simulate and measure.
      ControllerSpec spec{state.controller, proposal.gains, state.ranges};
      const Trajectory traj =
          run_episode(state.plant, spec, scenario, state.sim, ep_seed);
      const TrajectoryMetrics metrics = compute_metrics(traj);

      // Critic: strategy + qualitative feedback on the fresh metrics.
      PromptInputs critic_in = actor_in;
      critic_in.current_gains = proposal.gains;
      critic_in.current_metrics = metrics;
      critic_in.recommended_strategy =
          heuristic_critic(critic_in, heuristics).strategy;
      CriticFeedback feedback =
          ask(binding, AgentRole::Critic, critic_in, observer, parse_critic);
      state.last_feedback = feedback;

      IterationRecord record;
      record.iteration = iter;
      record.gains = proposal.gains;
      record.metrics = metrics;
      record.critic_strategy = to_string(feedback.strategy);
      record.clamp_warnings = clamp_warnings;
      state.loop_records.push_back(record);
      update_best(state.best_records, record);

      // Terminator: trends and analyses include the current iteration.
      PromptInputs term_in = base_inputs(state);
      term_in.best_attempts = state.best_records;
      term_in.current_gains = proposal.gains;
      term_in.current_metrics = metrics;
      term_in.latest_feedback = feedback;
      term_in.trend_window =
          trend_window_rows(state.loop_records, kTrendWindow);
      if (term_in.trend_window.size() >= 2) {
        term_in.improvement = improvement_analysis(term_in.trend_window);
        term_in.convergence = convergence_analysis(term_in.trend_window);
      }
      TerminatorVerdict verdict = ask(binding, AgentRole::Terminator, term_in,
                                      observer, parse_terminator);
      if (iter < state.settings.min_iterations &&
          verdict.decision != TerminatorDecision::Continue) {
        observer.on_event(
            "terminator verdict overridden to CONTINUE below the minimum "
            "iteration count");
        verdict.decision = TerminatorDecision::Continue;
      }

      auto& stored = state.loop_records.back();
      stored.terminator_decision = to_string(verdict.decision);
      stored.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        iter_start)
              .count();
      state.scenario_history.append(stored);
      observer.on_iteration(
          stored, render_log_line(iter, state.settings.max_iterations,
                                  state.controller, names, proposal.gains,
                                  metrics));

      if (verdict.decision == TerminatorDecision::TerminateSuccess) {
        observer.on_event("=== TERMINATOR DECISION: TERMINATE_SUCCESS ===");
        return LoopOutcome::Success;
      }
      if (verdict.decision == TerminatorDecision::TerminateRedesign) {
        observer.on_event("=== TERMINATOR DECISION: TERMINATE_REDESIGN ===");
        return LoopOutcome::Redesign;
      }
      consecutive_failures = 0;
    } catch (const std::runtime_error& e) {
      ++consecutive_failures;
      observer.on_event(std::string("iteration ") + std::to_string(iter) +
                        " aborted: " + e.what());
      if (consecutive_failures >= state.settings.consecutive_failure_cap) {
        observer.on_event("consecutive agent failures reached the cap");
        return LoopOutcome::BudgetExhausted;
      }
    }
  }
  observer.on_event("=== Reached max iterations (" +
                    std::to_string(state.settings.max_iterations) + ") ===");
  return LoopOutcome::BudgetExhausted;
}

namespace {

void reset_for_new_loop(RunState& state) {
  // Keep the most recent record so trends bridge the reconsideration; best
  // attempts persist for the scenario.
  if (!state.loop_records.empty()) {
    IterationRecord last = state.loop_records.back();
    state.loop_records.assign(1, last);
  }
}

void reset_for_scenario(RunState& state) {
  state.last_feedback.reset();
  state.loop_records.clear();
  state.best_records.clear();
  state.scenario_history.clear();
  state.reconsiderations = 0;
  state.ranges = default_ranges(state.controller, state.plant);
  state.global_limits = state.ranges;
}

ScenarioOutcome make_outcome(const RunState& state, bool success) {
  ScenarioOutcome out;
  out.scenario_id = state.scenario_ladder[state.scenario_index].id;
  out.controller = to_string(state.controller);
  out.success = success;
  out.iterations_used = static_cast<int>(state.scenario_history.size());
  out.reconsiderations = state.reconsiderations;
  if (!state.best_records.empty()) {
    out.best_gains = state.best_records.front().gains;
    out.best_metrics = state.best_records.front().metrics;
  }
  return out;
}

JurorVerdict consult_juror(RunState& state, const AgentBinding& binding,
                           RunObserver& observer, int loop_iterations) {
  PromptInputs in = base_inputs(state);
  // Statistics cover the loop that just ended (the carried-over row from a
  // previous loop is excluded).
  std::vector<IterationRecord> just_ended;
  const auto n = std::min<std::size_t>(loop_iterations,
                                       state.loop_records.size());
  just_ended.assign(state.loop_records.end() - n, state.loop_records.end());
  in.parameter_stats = parameter_statistics(just_ended);
  in.stability_rate = stability_rate(just_ended);
  in.total_iterations = static_cast<int>(just_ended.size());
  in.reconsiderations = state.reconsiderations;
  return ask(binding, AgentRole::Juror, in, observer, parse_juror);
}

}  // namespace

FinalReport run_campaign(RunState& state, const AgentBinding& binding,
                         RunObserver& observer) {
  FinalReport report;
  report.plant = state.plant.name();
  report.scenario_count = static_cast<int>(state.scenario_ladder.size());

  for (state.controller_index = 0;
       state.controller_index <
       static_cast<int>(state.controller_queue.size());
       ++state.controller_index) {
    state.controller = state.controller_queue[state.controller_index];

    if (state.agent_selector) {
      PromptInputs in = base_inputs(state);
      in.controller_type = state.controller;
      in.ranges = default_ranges(state.controller, state.plant);
      SelectorChoice choice =
          ask(binding, AgentRole::Selector, in, observer, parse_selector);
      state.controller = choice.controller_type;
      observer.on_event("=== SELECTING CONTROLLER ===\nSelected Controller: " +
                        to_string(state.controller));
    }

    report.scenarios_completed = 0;
    bool controller_failed = false;

    for (state.scenario_index = 0;
         state.scenario_index < static_cast<int>(state.scenario_ladder.size());
         ++state.scenario_index) {
      reset_for_scenario(state);

      if (state.agent_scenarist) {
        PromptInputs in = base_inputs(state);
        in.selected_parameters = {};
        for (const auto& [name, range] : state.ranges)
          in.selected_parameters[name] = 0.5 * (range[0] + range[1]);
        ScenaristScenario sc = ask(binding, AgentRole::Scenarist, in, observer,
                                   parse_scenarist);
        state.scenario_ladder[state.scenario_index] = sc.scenario;
        observer.on_event("=== DESIGNING SCENARIO ===\nScenario " +
                          sc.scenario.id + " accepted");
      }
      observer.on_event(
          "Scenario " + state.scenario_ladder[state.scenario_index].id +
          ": IC Range [" +
          fmt_trimmed(state.scenario_ladder[state.scenario_index].ic_lo) +
          ", " +
          fmt_trimmed(state.scenario_ladder[state.scenario_index].ic_hi) +
          "]");

      bool scenario_done = false;
      while (!scenario_done) {
        const LoopOutcome outcome = run_inner_loop(state, binding, observer);
        const int loop_len = state.loop_iteration;
        if (outcome == LoopOutcome::Success) {
          observer.on_event("Scenario " + std::to_string(state.scenario_index + 1) +
                            " completed successfully!");
          report.scenarios.push_back(make_outcome(state, true));
          ++report.scenarios_completed;
          scenario_done = true;
          continue;
        }

        // Failure: the juror arbitrates between a new search box and moving
        // to the next controller.
        if (state.reconsiderations >= state.settings.reconsideration_cap) {
          observer.on_event("reconsideration cap reached; switching controller");
          report.scenarios.push_back(make_outcome(state, false));
          controller_failed = true;
          break;
        }
        JurorVerdict verdict = consult_juror(state, binding, observer, loop_len);
        if (verdict.decision == JurorDecision::ReconsiderRange &&
            verdict.new_range) {
          ++state.reconsiderations;
          for (const auto& [name, range] : *verdict.new_range)
            state.ranges[name] = range;
          observer.on_event("=== JUROR DECISION: RECONSIDER_RANGE ===");
          reset_for_new_loop(state);
          continue;
        }
        observer.on_event("=== JUROR DECISION: EXPLORE_FURTHER ===\n"
                          "switching to the next controller");
        report.scenarios.push_back(make_outcome(state, false));
        controller_failed = true;
        break;
      }
      if (controller_failed) break;
    }

    if (!controller_failed) {
      report.all_completed =
          report.scenarios_completed == report.scenario_count;
      observer.on_event("=== FINAL REPORT ===\n" + report.summary());
      return report;
    }
  }

  report.all_completed = report.scenarios_completed == report.scenario_count;
  observer.on_event("=== FINAL REPORT ===\n" + report.summary() +
                    " (controller queue exhausted)");
  return report;
}

}  // namespace ctlopt
