#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctlopt/config.hpp"
#include "ctlopt/orchestrator.hpp"

namespace ctlopt {

/// Persists a run: iterations.jsonl, transcript.jsonl, run.log, and echoes
/// log lines to an optional stream.
class RunWriter : public RunObserver {
public:
  RunWriter(const std::filesystem::path& dir, std::ostream* echo = nullptr);

  void on_iteration(const IterationRecord& record,
                    const std::string& log_line) override;
  void on_agent_exchange(AgentRole role, const RenderedPrompt& prompt,
                         const std::string& response) override;
  void on_event(const std::string& text) override;

  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
  std::ofstream iterations_;
  std::ofstream transcript_;
  std::ofstream log_;
  std::ostream* echo_;
};

std::string iteration_record_to_json(const IterationRecord& record);
std::string final_report_to_json(const FinalReport& report);
void write_final_report(const std::filesystem::path& path,
                        const FinalReport& report);

/// Creates runs/<timestamp>-<plant>/ under base.
std::filesystem::path make_run_dir(const std::filesystem::path& base,
                                   const std::string& plant_id);

// ---- Monte Carlo -----------------------------------------------------------

struct ComparisonRow {
  std::string scenario;
  std::string method;
  std::map<std::string, double> gains;
  double mse = 0.0;
  double settling_time = 0.0;
  double overshoot = 0.0;
  double control_effort = 0.0;
  double stable_fraction = 0.0;
  int runs = 0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string to_csv() const;
  std::string to_text() const;
};

/// n seeded episodes per (scenario, method); means tabulated. Seeds are
/// seed0 + k. Episodes fan out to `jobs` worker threads.
ComparisonTable run_monte_carlo(const PlantModel& plant,
                                const std::vector<MethodSpec>& methods,
                                const std::vector<Scenario>& scenarios,
                                const SimConfig& sim, std::uint64_t seed0,
                                int runs, int jobs);

// ---- Plot data and replay comparison ---------------------------------------

/// Reads a run directory's iterations.jsonl and emits per-iteration
/// parameter/metric evolution CSV.
std::string evolution_csv_from_run(const std::filesystem::path& run_dir);

/// Per-field relative deviation between recomputed iteration metrics and a
/// reference log excerpt (the compact "#k/N | ..." run-log rendering).
struct FieldDeviation {
  int iteration = 0;
  std::string field;
  double reference = 0.0;
  double recomputed = 0.0;
  double relative = 0.0;
};

struct ComparisonReport {
  std::vector<FieldDeviation> deviations;
  bool decisions_match = false;
  std::vector<std::string> notes;
  std::string to_json() const;
};

struct ReferenceLogLine {
  int iteration = 0;
  std::string type;
  std::map<std::string, double> gains;
  std::map<std::string, double> metrics;  // MSE, Ts, Tr, %OS, ZC, CZC, CE, e_ss
  bool stable = false;
};

std::vector<ReferenceLogLine> parse_reference_log(std::istream& is);

ComparisonReport compare_with_reference(
    const std::vector<ReferenceLogLine>& reference,
    const std::vector<IterationRecord>& recomputed);

}  // namespace ctlopt
