#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctlopt/config.hpp"
#include "ctlopt/report.hpp"

using namespace ctlopt;

namespace {

IterationRecord row(double kp, double mse, double ts, double os) {
  IterationRecord r;
  r.gains = {{"Kp", kp}};
  r.metrics.mse = mse;
  r.metrics.settling_time = ts;
  r.metrics.overshoot = os;
  r.metrics.stable = true;
  return r;
}

std::vector<IterationRecord> kp_window(std::initializer_list<double> kps) {
  std::vector<IterationRecord> rows;
  for (double kp : kps) rows.push_back(row(kp, 1.0, 1.0, 1.0));
  return rows;
}

}  // namespace

TEST_CASE("improvement analysis reproduces the reference trend block") {
  std::vector<IterationRecord> window{
      row(13.0, 0.9103, 3.74, 11.2451), row(12.5, 0.9103, 3.77, 10.7139),
      row(13.0, 0.9103, 3.74, 11.2451), row(12.5, 0.9103, 3.77, 10.7139),
      row(12.25, 0.9104, 3.79, 10.4325)};
  const auto imp = improvement_analysis(window);
  CHECK(imp.mse_change == doctest::Approx(-0.0112).epsilon(0.5));
  CHECK(std::abs(imp.mse_change - (-0.0110)) < 0.02);
  CHECK(std::abs(imp.settling_time_change - (-1.3369)) < 0.02);
  CHECK(std::abs(imp.overshoot_change - 7.2263) < 0.02);
  CHECK(imp.iterations_analyzed == 5);
}

TEST_CASE("improvement analysis on the iteration-3 window") {
  std::vector<IterationRecord> window{row(50, 0.9203, 4.78, 18.2480),
                                      row(30, 0.9173, 4.22, 17.7074),
                                      row(60, 0.9225, 5.50, 18.2861)};
  const auto imp = improvement_analysis(window);
  CHECK(std::abs(imp.mse_change - (-0.2385)) < 0.01);
  CHECK(std::abs(imp.settling_time_change - (-15.0628)) < 0.01);
  CHECK(std::abs(imp.overshoot_change - (-0.2085)) < 0.01);
  CHECK(imp.iterations_analyzed == 3);
}

TEST_CASE("constant window reports zero improvement") {
  const auto imp = improvement_analysis(kp_window({12.5, 12.5, 12.5}));
  CHECK(imp.mse_change == 0.0);
  CHECK(imp.settling_time_change == 0.0);
  CHECK(imp.overshoot_change == 0.0);
}

TEST_CASE("convergence analysis reproduces the reference values") {
  const auto conv =
      convergence_analysis(kp_window({13.0, 12.5, 13.0, 12.5, 12.25}));
  CHECK(std::abs(conv.parameter_changes.at("Kp") - 3.4231) < 0.01);
  CHECK(std::abs(conv.max_change_percent - 3.4231) < 0.01);
  CHECK(conv.converged);
  CHECK(conv.iterations_analyzed == 5);

  const auto wild = convergence_analysis(kp_window({50.0, 30.0, 60.0}));
  CHECK(wild.max_change_percent == doctest::Approx(70.0));
  CHECK_FALSE(wild.converged);

  const auto flat = convergence_analysis(kp_window({12.5, 12.5, 12.5}));
  CHECK(flat.max_change_percent == 0.0);
  CHECK(flat.converged);
}

TEST_CASE("degenerate zero parameter values are skipped in convergence") {
  const auto conv = convergence_analysis(kp_window({0.0, 5.0, 5.0}));
  CHECK(conv.parameter_changes.at("Kp") == doctest::Approx(0.0));
}

TEST_CASE("windows below two rows violate the precondition") {
  CHECK_THROWS_AS(improvement_analysis(kp_window({1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(convergence_analysis(kp_window({1.0})),
                  std::invalid_argument);
}

TEST_CASE("composite score: targets ratio, instability, monotonicity") {
  Targets targets{0.9, 3.0, 10.0};
  TrajectoryMetrics at_target;
  at_target.mse = 0.9;
  at_target.settling_time = 3.0;
  at_target.overshoot = 10.0;
  at_target.stable = true;
  CHECK(composite_score(at_target, targets) == doctest::Approx(3.0));

  TrajectoryMetrics unstable = at_target;
  unstable.stable = false;
  CHECK(std::isinf(composite_score(unstable, targets)));

  TrajectoryMetrics never_settles = at_target;
  never_settles.settling_time = kInf;
  CHECK(std::isinf(composite_score(never_settles, targets)));

  TrajectoryMetrics better = at_target;
  better.mse = 0.8;
  CHECK(composite_score(better, targets) < composite_score(at_target, targets));
}

TEST_CASE("best-attempt ranking prefers stability, then mse, then settling") {
  SharedBuffer buffer;
  auto rec = [&](int i, bool stable, double mse, double ts) {
    IterationRecord r = row(10.0 + i, mse, ts, 5.0);
    r.iteration = i;
    r.metrics.stable = stable;
    buffer.append(r);
  };
  rec(1, false, 0.01, 1.0);  // unstable never outranks stable
  rec(2, true, 0.92, 3.0);
  rec(3, true, 0.91, 4.0);
  rec(4, true, 0.91, 3.5);
  const auto best = buffer.best_attempts(2);
  REQUIRE(best.size() == 2);
  CHECK(best[0].iteration == 4);  // mse tie broken by settling time
  CHECK(best[1].iteration == 3);
}

TEST_CASE("inner loop with a one-iteration cap exhausts its budget") {
  RunConfig cfg = parse_run_config(R"({
    "plant": "dc_motor",
    "controllers": ["P"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "max_iterations": 1,
    "min_iterations": 6,
    "seeds": [7]
  })");
  RunState state = build_state(cfg, 7);
  state.controller = ControllerKind::P;
  state.ranges = default_ranges(ControllerKind::P, state.plant);
  state.global_limits = state.ranges;
  AgentBinding binding = build_binding(cfg, 7);
  RunObserver quiet;
  CHECK(run_inner_loop(state, binding, quiet) == LoopOutcome::BudgetExhausted);
  CHECK(state.loop_records.size() == 1);
}

TEST_CASE("buffer grows append-only and the best set only improves") {
  RunConfig cfg = parse_run_config(R"({
    "plant": "dc_motor",
    "controllers": ["P"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "targets": {"mse": 0.5, "settling_time": 1.0, "overshoot": 2.0},
    "max_iterations": 12,
    "min_iterations": 6,
    "seeds": [3]
  })");
  RunState state = build_state(cfg, 3);
  state.controller = ControllerKind::P;
  state.ranges = default_ranges(ControllerKind::P, state.plant);
  state.global_limits = state.ranges;
  AgentBinding binding = build_binding(cfg, 3);

  struct Watcher : RunObserver {
    std::size_t last_size = 0;
    double best_mse = kInf;
    std::vector<double> best_trace;
    void on_iteration(const IterationRecord& rec, const std::string&) override {
      best_mse = std::min(best_mse, rec.metrics.mse);
      best_trace.push_back(best_mse);
      ++last_size;
    }
  } watcher;

  run_inner_loop(state, binding, watcher);
  CHECK(state.scenario_history.size() == watcher.last_size);
  for (std::size_t i = 1; i < watcher.best_trace.size(); ++i)
    CHECK(watcher.best_trace[i] <= watcher.best_trace[i - 1] + 1e-15);
  // Terminator is never consulted with fewer than two rows for analyses:
  // records before min_iterations are all CONTINUE.
  const auto& all = state.scenario_history.all();
  for (std::size_t i = 0; i + 1 < all.size() && i + 1 < 6; ++i)
    CHECK(all[i].terminator_decision == "CONTINUE");
}

TEST_CASE("campaign on the pendulum switches PID to FSF under a tight cap") {
  RunConfig cfg = parse_run_config(R"({
    "plant": "pendulum",
    "controllers": ["PID", "FSF"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "targets": {"mse": 0.48, "settling_time": 1.2, "overshoot": 12.0},
    "max_iterations": 4,
    "min_iterations": 4,
    "reconsideration_cap": 10,
    "seeds": [23]
  })");
  RunState state = build_state(cfg, 23);
  AgentBinding binding = build_binding(cfg, 23);

  struct Events : RunObserver {
    int reconsiderations = 0;
    bool switched = false;
    void on_event(const std::string& text) override {
      if (text.find("RECONSIDER_RANGE") != std::string::npos)
        ++reconsiderations;
      if (text.find("switching") != std::string::npos) switched = true;
    }
  } events;

  const FinalReport report = run_campaign(state, binding, events);
  // The PID loop cannot hit the targets in 4 iterations; the juror
  // accumulates range reconsiderations and eventually FSF takes over.
  bool pid_failed = false, fsf_seen = false;
  for (const auto& s : report.scenarios) {
    if (s.controller == "PID" && !s.success) pid_failed = true;
    if (s.controller == "FSF") fsf_seen = true;
  }
  CHECK(pid_failed);
  CHECK(fsf_seen);
  CHECK(events.reconsiderations >= 2);
}

TEST_CASE("juror-updated ranges stay inside the global limits") {
  RunConfig cfg = parse_run_config(R"({
    "plant": "dc_motor",
    "controllers": ["P"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "targets": {"mse": 0.5, "settling_time": 0.5, "overshoot": 1.0},
    "max_iterations": 8,
    "min_iterations": 6,
    "reconsideration_cap": 3,
    "seeds": [5]
  })");
  RunState state = build_state(cfg, 5);
  AgentBinding binding = build_binding(cfg, 5);
  RunObserver quiet;
  run_campaign(state, binding, quiet);
  const auto limits = default_ranges(ControllerKind::P, state.plant);
  for (const auto& [name, range] : state.ranges) {
    CHECK(range[0] >= limits.at(name)[0] - 1e-12);
    CHECK(range[1] <= limits.at(name)[1] + 1e-12);
    CHECK(range[0] < range[1]);
  }
  CHECK(state.reconsiderations <= 3);
}

TEST_CASE("identical seeds give byte-identical reports") {
  const char* cfg_text = R"({
    "plant": "dc_motor",
    "controllers": ["P"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "targets": {"mse": 0.95, "settling_time": 5.0, "overshoot": 12.0},
    "max_iterations": 10,
    "min_iterations": 4,
    "seeds": [21]
  })";
  auto run = [&]() {
    RunConfig cfg = parse_run_config(cfg_text);
    RunState state = build_state(cfg, 21);
    AgentBinding binding = build_binding(cfg, 21);
    RunObserver quiet;
    return final_report_to_json(run_campaign(state, binding, quiet));
  };
  CHECK(run() == run());
}

TEST_CASE("log line rendering matches the reference run-log format") {
  TrajectoryMetrics m;
  m.mse = 0.9203;
  m.settling_time = 4.78;
  m.rise_time = 1.89;
  m.overshoot = 18.2480;
  m.zero_crossings = 8;
  m.control_zero_crossings = 8;
  m.control_effort = 9060.5072;
  m.ss_error = 0.024;
  m.stable = true;
  const auto line =
      render_log_line(1, 30, ControllerKind::P, {"Kp"}, {{"Kp", 50.0}}, m);
  CHECK(line ==
        "#1/30 | Type:P | Kp:50.000 | MSE:0.9203 | Ts:4.78 | Tr:1.89 | "
        "%OS:18.25 | ZC:8 | CZC:8 | CE:9060.51 | e_ss:0.02 | isStb:True");

  TrajectoryMetrics diverged;
  diverged.mse = 1.2373;
  diverged.settling_time = kInf;
  diverged.rise_time = kInf;
  diverged.ss_error = 1.98;
  diverged.control_effort = 638.64;
  diverged.control_zero_crossings = 2;
  const auto fsf_line = render_log_line(
      3, 20, ControllerKind::FSF, {"K1", "K2", "K3", "K4"},
      {{"K1", 1.0}, {"K2", 20.0}, {"K3", 10.0}, {"K4", 1.0}}, diverged);
  CHECK(fsf_line ==
        "#3/20 | Type:FSF | K1:1.00 | K2:20.00 | K3:10.00 | K4:1.00 | "
        "MSE:1.2373 | Ts:inf | Tr:inf | %OS:0.00 | ZC:0 | CZC:2 | CE:638.64 | "
        "e_ss:1.98 | isStb:False");
}

namespace {

// A backend that garbles its first actor reply, then delegates to the
// heuristic: exercises the single automatic re-prompt.
class FlakyActorBackend : public AgentBackend {
public:
  explicit FlakyActorBackend(std::uint64_t seed) : inner_(seed) {}
  std::string kind() const override { return "flaky"; }
  std::string respond(AgentRole role, const PromptInputs& in,
                      const RenderedPrompt& prompt) override {
    if (role == AgentRole::Actor && !failed_once_) {
      failed_once_ = true;
      return "I would suggest a gain of about twelve or so.";
    }
    if (role == AgentRole::Actor) ++actor_calls_;
    return inner_.respond(role, in, prompt);
  }
  int actor_calls() const { return actor_calls_; }
  bool tripped() const { return failed_once_; }

private:
  HeuristicBackend inner_;
  bool failed_once_ = false;
  int actor_calls_ = 0;
};

}  // namespace

TEST_CASE("a malformed agent reply triggers one re-prompt, then recovers") {
  RunConfig cfg = parse_run_config(R"({
    "plant": "dc_motor",
    "controllers": ["P"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "max_iterations": 3,
    "min_iterations": 6,
    "seeds": [9]
  })");
  RunState state = build_state(cfg, 9);
  state.controller = ControllerKind::P;
  state.ranges = default_ranges(ControllerKind::P, state.plant);
  state.global_limits = state.ranges;

  auto flaky = std::make_shared<FlakyActorBackend>(9);
  AgentBinding binding;
  for (auto role : {AgentRole::Selector, AgentRole::Scenarist, AgentRole::Actor,
                    AgentRole::Critic, AgentRole::Terminator, AgentRole::Juror})
    binding.backends[role] = flaky;

  RunObserver quiet;
  const auto outcome = run_inner_loop(state, binding, quiet);
  CHECK(outcome == LoopOutcome::BudgetExhausted);
  CHECK(flaky->tripped());
  // All three iterations completed despite the garbled first reply.
  CHECK(state.loop_records.size() == 3);
  CHECK(flaky->actor_calls() == 3);
}
