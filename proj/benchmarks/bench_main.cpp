#include <benchmark/benchmark.h>

#include "ctlopt/config.hpp"
#include "ctlopt/lqr.hpp"
#include "ctlopt/metrics.hpp"

using namespace ctlopt;

namespace {

constexpr double kPi = 3.14159265358979323846;

void BM_dc_motor_episode(benchmark::State& state) {
  PlantModel plant = PlantModel::from_name("dc_motor");
  ControllerSpec spec{ControllerKind::P, {{"Kp", 12.75}}, {}};
  Scenario sc{"I", kPi, kPi, 0, 0, 0};
  const SimConfig sim = default_sim(plant.id());
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(plant, spec, sc, sim, 1));
  }
}
BENCHMARK(BM_dc_motor_episode);

void BM_ball_beam_noisy_episode(benchmark::State& state) {
  PlantModel plant = PlantModel::from_name("ball_beam");
  ControllerSpec spec{
      ControllerKind::FSF,
      {{"K1", 5.75}, {"K2", 9.5}, {"K3", 47.5}, {"K4", 5.75}},
      {}};
  Scenario sc{"II", 1.0, 1.0, 0.01, 1.0, 0.0};
  const SimConfig sim = default_sim(plant.id());
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(plant, spec, sc, sim, 7));
  }
}
BENCHMARK(BM_ball_beam_noisy_episode);

void BM_compute_metrics(benchmark::State& state) {
  PlantModel plant = PlantModel::from_name("dc_motor");
  ControllerSpec spec{ControllerKind::P, {{"Kp", 12.75}}, {}};
  Scenario sc{"I", kPi, kPi, 0, 0, 0};
  const auto traj = run_episode(plant, spec, sc, default_sim(plant.id()), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_metrics(traj));
  }
}
BENCHMARK(BM_compute_metrics);

void BM_solve_care_4x4(benchmark::State& state) {
  PlantModel bb = PlantModel::from_name("ball_beam");
  Mat A, B;
  design_matrices(bb, A, B);
  Eigen::VectorXd q(4);
  q << 100, 100, 10, 10;
  LqrProblem p{A, B, q.asDiagonal().toDenseMatrix(), 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_care(p));
  }
}
BENCHMARK(BM_solve_care_4x4);

void BM_heuristic_inner_loop(benchmark::State& state) {
  const char* cfg_text = R"({
    "plant": "dc_motor",
    "controllers": ["P"],
    "scenarios": [{"id": "I", "initial_condition_range": [3.14159265, 3.14159265]}],
    "targets": {"mse": 0.9, "settling_time": 3.0, "overshoot": 10.0},
    "max_iterations": 10,
    "min_iterations": 6,
    "seeds": [42]
  })";
  for (auto _ : state) {
    RunConfig cfg = parse_run_config(cfg_text);
    RunState run = build_state(cfg, 42);
    run.controller = ControllerKind::P;
    run.ranges = default_ranges(ControllerKind::P, run.plant);
    run.global_limits = run.ranges;
    AgentBinding binding = build_binding(cfg, 42);
    RunObserver quiet;
    benchmark::DoNotOptimize(run_inner_loop(run, binding, quiet));
  }
}
BENCHMARK(BM_heuristic_inner_loop);

void BM_render_actor_prompt(benchmark::State& state) {
  PlantModel plant = PlantModel::from_name("ball_beam");
  PromptInputs in;
  in.plant = &plant;
  in.controller_type = ControllerKind::FSF;
  in.ranges = default_ranges(ControllerKind::FSF, plant);
  in.iteration = 7;
  in.max_iterations = 20;
  in.targets = {0.2, 6.0, 5.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_prompt(AgentRole::Actor, in));
  }
}
BENCHMARK(BM_render_actor_prompt);

}  // namespace

BENCHMARK_MAIN();
