#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "ctlopt/config.hpp"
#include "ctlopt/lqr.hpp"
#include "ctlopt/report.hpp"

namespace fs = std::filesystem;
using namespace ctlopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;

struct CliError {
  int code;
  std::string message;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw CliError{kExitConfig, "cannot write " + path.string()};
  f << text;
}

fs::path run_one(const RunConfig& config, std::uint64_t seed,
                 const fs::path& out_base, bool echo) {
  const fs::path dir = make_run_dir(out_base, config.plant_id);
  RunWriter writer(dir, echo ? &std::cout : nullptr);
  AgentBinding binding = build_binding(config, seed);
  RunState state = build_state(config, seed);
  const FinalReport report = run_campaign(state, binding, writer);
  write_final_report(dir / "report.json", report);
  std::cout << report.summary() << "\n";
  std::cout << "run outputs: " << dir.string() << "\n";
  return dir;
}

int cmd_optimize(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed) {
  RunConfig config = load_run_config(config_path);
  const fs::path out_base = out_dir.empty() ? fs::path(config.out_dir)
                                            : fs::path(out_dir);
  // Snapshot the configuration next to the outputs.
  std::ifstream src(config_path);
  std::ostringstream cfg_text;
  cfg_text << src.rdbuf();

  std::vector<std::uint64_t> seeds = config.seeds;
  if (has_seed) seeds = {seed_override};
  for (const auto seed : seeds) {
    const fs::path dir = run_one(config, seed, out_base, true);
    write_text(dir / "config.json", cfg_text.str());
  }
  return kExitOk;
}

int cmd_replay(const std::string& config_path, const std::string& transcript,
               const std::string& reference_log, const std::string& out_dir) {
  RunConfig config = load_run_config(config_path);
  if (!transcript.empty()) {
    for (auto role : {AgentRole::Selector, AgentRole::Scenarist,
                      AgentRole::Actor, AgentRole::Critic,
                      AgentRole::Terminator, AgentRole::Juror}) {
      config.agents[role].kind = "replay";
      config.agents[role].transcript = transcript;
    }
  }
  const fs::path out_base = out_dir.empty() ? fs::path(config.out_dir)
                                            : fs::path(out_dir);
  const fs::path dir = make_run_dir(out_base, config.plant_id + "-replay");
  RunWriter writer(dir, &std::cout);
  AgentBinding binding = build_binding(config, config.seeds.front());
  RunState state = build_state(config, config.seeds.front());
  const FinalReport report = run_campaign(state, binding, writer);
  write_final_report(dir / "report.json", report);

  if (!reference_log.empty()) {
    std::ifstream ref(reference_log);
    if (!ref)
      throw CliError{kExitConfig, "cannot open reference log " + reference_log};
    const auto reference = parse_reference_log(ref);
    const auto recomputed = state.scenario_history.all();
    auto comparison = compare_with_reference(reference, recomputed);
    bool decisions_ok = !recomputed.empty();
    for (std::size_t i = 0; i + 1 < recomputed.size(); ++i)
      decisions_ok = decisions_ok &&
                     recomputed[i].terminator_decision == "CONTINUE";
    if (!recomputed.empty())
      decisions_ok = decisions_ok &&
                     recomputed.back().terminator_decision != "CONTINUE";
    comparison.decisions_match = decisions_ok;
    write_text(dir / "comparison.json", comparison.to_json() + "\n");
    std::cout << "comparison report: " << (dir / "comparison.json").string()
              << "\n";
  }
  std::cout << report.summary() << "\n";
  return kExitOk;
}

int cmd_montecarlo(const std::string& config_path, int runs, int jobs,
                   std::uint64_t seed_override, bool has_seed,
                   const std::string& out_csv) {
  RunConfig config = load_run_config(config_path);
  if (config.methods.empty())
    throw CliError{kExitConfig, "montecarlo requires a methods array"};
  const std::uint64_t seed0 =
      has_seed ? seed_override : config.seeds.front();
  std::vector<Scenario> scenarios = config.scenarios;
  if (scenarios.empty()) scenarios = default_scenario_ladder(config.plant);
  const auto table = run_monte_carlo(config.plant, config.methods, scenarios,
                                     config.sim, seed0, runs, jobs);
  std::cout << table.to_text();
  if (!out_csv.empty()) {
    write_text(out_csv, table.to_csv());
    std::cout << "csv: " << out_csv << "\n";
  }
  return kExitOk;
}

int cmd_lqr(const std::string& plant_id, std::vector<double> q, double r,
            const std::string& out_json) {
  const PlantModel plant = PlantModel::from_name(plant_id);
  if (static_cast<int>(q.size()) != plant.state_dim())
    throw CliError{kExitConfig,
                   "Q diagonal needs " + std::to_string(plant.state_dim()) +
                       " entries for " + plant_id};
  Eigen::VectorXd q_diag(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) q_diag[i] = q[i];

  LqrDesign design;
  try {
    design = lqr_gains(plant, q_diag, r);
  } catch (const UnstabilizableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  nlohmann::ordered_json j;
  j["plant"] = plant_id;
  auto mat = [](const Mat& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      rows.push_back(row);
    }
    return rows;
  };
  j["A"] = mat(design.A);
  j["B"] = mat(design.B);
  j["P"] = mat(design.care.P);
  j["K"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < design.care.K.size(); ++i)
    j["K"].push_back(design.care.K[i]);
  j["residual"] = design.care.residual;
  j["closed_loop_eigenvalues"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < design.care.closed_loop_eigenvalues.size(); ++i) {
    const auto ev = design.care.closed_loop_eigenvalues[i];
    j["closed_loop_eigenvalues"].push_back({{"re", ev.real()},
                                            {"im", ev.imag()}});
  }
  const std::string text = j.dump(2);
  std::cout << text << "\n";
  if (!out_json.empty()) write_text(out_json, text + "\n");
  return kExitOk;
}

int cmd_plotdata(const std::string& run_dir, const std::string& out_dir) {
  const fs::path run(run_dir);
  if (!fs::exists(run / "iterations.jsonl"))
    throw CliError{kExitConfig,
                   "run directory has no iterations.jsonl: " + run_dir};
  const fs::path out = out_dir.empty() ? run : fs::path(out_dir);
  fs::create_directories(out);
  write_text(out / "evolution.csv", evolution_csv_from_run(run));
  std::cout << "evolution csv: " << (out / "evolution.csv").string() << "\n";

  // Best-trajectory CSV: re-simulate the reported best gains when the run
  // carries a config snapshot and a report.
  if (fs::exists(run / "report.json") && fs::exists(run / "config.json")) {
    std::ifstream rep(run / "report.json");
    auto j = nlohmann::json::parse(rep, nullptr, false);
    if (!j.is_discarded() && j.contains("scenarios") &&
        !j["scenarios"].empty()) {
      RunConfig config = load_run_config((run / "config.json").string());
      const auto& last = j["scenarios"].back();
      if (last.contains("best_gains") && !last["best_gains"].empty()) {
        ControllerSpec spec;
        spec.kind = controller_kind_from_string(
            last.value("controller", std::string("P")));
        for (const auto& [name, value] : last["best_gains"].items())
          spec.gains[name] = value.get<double>();
        std::vector<Scenario> ladder = config.scenarios;
        if (ladder.empty()) ladder = default_scenario_ladder(config.plant);
        const auto traj = run_episode(config.plant, spec, ladder.front(),
                                      config.sim, config.seeds.front());
        std::ofstream best_csv(out / "best_trajectory.csv");
        write_trajectory_csv(best_csv, config.plant, traj);
        std::cout << "best trajectory csv: "
                  << (out / "best_trajectory.csv").string() << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Controller-design automation toolkit: actor-critic gain tuning over "
      "simulated plants with pluggable agent backends"};
  app.require_subcommand(1);

  std::string config_path, out_dir, transcript, reference_log, out_csv;
  std::string plant_id = "pendulum", out_json, run_dir;
  std::vector<double> q_diag;
  double r_weight = 1.0;
  int runs = 100;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  std::uint64_t seed = 0;

  auto* optimize = app.add_subcommand(
      "optimize", "Run the full multi-agent optimization campaign");
  optimize->add_option("--config", config_path, "Run configuration JSON")
      ->required();
  optimize->add_option("--out", out_dir, "Output directory (default: runs/)");
  auto* opt_seed = optimize->add_option("--seed", seed, "Seed override");

  auto* replay = app.add_subcommand(
      "replay", "Re-run a campaign from a recorded transcript");
  replay->add_option("--config", config_path, "Run configuration JSON")
      ->required();
  replay->add_option("--transcript", transcript,
                     "Transcript JSONL (overrides config backends)");
  replay->add_option("--reference-log", reference_log,
                     "Reference log excerpt to diff against");
  replay->add_option("--out", out_dir, "Output directory");

  auto* mc = app.add_subcommand(
      "montecarlo", "Seeded Monte Carlo comparison of fixed-gain methods");
  mc->add_option("--config", config_path, "Run configuration JSON")
      ->required();
  mc->add_option("--runs", runs, "Episodes per (scenario, method)");
  mc->add_option("--jobs", jobs, "Worker threads");
  auto* mc_seed = mc->add_option("--seed", seed, "Base seed");
  mc->add_option("--out", out_csv, "CSV output path");

  auto* lqr_cmd = app.add_subcommand(
      "lqr", "Solve the Riccati equation for a plant and print the gains");
  lqr_cmd->add_option("--plant", plant_id, "Plant id")->required();
  lqr_cmd->add_option("--q", q_diag, "Q diagonal entries")->required();
  lqr_cmd->add_option("--r", r_weight, "R weight")->required();
  lqr_cmd->add_option("--out", out_json, "Audit JSON output path");

  auto* plot = app.add_subcommand(
      "plotdata", "Emit per-iteration evolution and best-trajectory CSVs");
  plot->add_option("--run", run_dir, "Run output directory")->required();
  plot->add_option("--out", out_dir, "CSV output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize)
      return cmd_optimize(config_path, out_dir, seed, opt_seed->count() > 0);
    if (*replay)
      return cmd_replay(config_path, transcript, reference_log, out_dir);
    if (*mc)
      return cmd_montecarlo(config_path, runs, jobs, seed,
                            mc_seed->count() > 0, out_csv);
    if (*lqr_cmd) return cmd_lqr(plant_id, q_diag, r_weight, out_json);
    if (*plot) return cmd_plotdata(run_dir, out_dir);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
