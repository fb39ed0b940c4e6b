#include "ctlopt/report.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

namespace ctlopt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json metrics_to_json(const TrajectoryMetrics& m) {
  ordered_json j;
  auto put = [&j](const char* key, double v) {
    if (std::isinf(v)) j[key] = v > 0 ? "inf" : "-inf";
    else j[key] = v;
  };
  put("mse", m.mse);
  put("settling_time", m.settling_time);
  put("rise_time", m.rise_time);
  put("overshoot", m.overshoot);
  j["zero_crossings"] = m.zero_crossings;
  j["control_zero_crossings"] = m.control_zero_crossings;
  put("control_effort", m.control_effort);
  put("ss_error", m.ss_error);
  j["stable"] = m.stable;
  return j;
}

}  // namespace

RunWriter::RunWriter(const fs::path& dir, std::ostream* echo)
    : dir_(dir), echo_(echo) {
  fs::create_directories(dir);
  iterations_.open(dir / "iterations.jsonl");
  transcript_.open(dir / "transcript.jsonl");
  log_.open(dir / "run.log");
  if (!iterations_ || !transcript_ || !log_)
    throw ConfigError("cannot create run outputs under " + dir.string());
}

void RunWriter::on_iteration(const IterationRecord& record,
                             const std::string& log_line) {
  iterations_ << iteration_record_to_json(record) << "\n";
  iterations_.flush();
  log_ << log_line << "\n";
  log_.flush();
  if (echo_) (*echo_) << log_line << "\n";
}

void RunWriter::on_agent_exchange(AgentRole role, const RenderedPrompt& prompt,
                                  const std::string& response) {
  ordered_json j;
  j["role"] = to_string(role);
  j["request_digest"] = prompt_digest(prompt);
  j["response"] = response;
  transcript_ << j.dump() << "\n";
  transcript_.flush();
}

void RunWriter::on_event(const std::string& text) {
  log_ << text << "\n";
  log_.flush();
  if (echo_) (*echo_) << text << "\n";
}

std::string iteration_record_to_json(const IterationRecord& record) {
  ordered_json j;
  j["iteration"] = record.iteration;
  j["gains"] = record.gains;
  j["metrics"] = metrics_to_json(record.metrics);
  j["critic_strategy"] = record.critic_strategy;
  j["terminator_decision"] = record.terminator_decision;
  j["clamp_warnings"] = record.clamp_warnings;
  j["wall_time_s"] = record.wall_time_s;
  return j.dump();
}

std::string final_report_to_json(const FinalReport& report) {
  ordered_json j;
  j["plant"] = report.plant;
  j["scenario_count"] = report.scenario_count;
  j["scenarios_completed"] = report.scenarios_completed;
  j["all_completed"] = report.all_completed;
  j["summary"] = report.summary();
  j["scenarios"] = ordered_json::array();
  for (const auto& s : report.scenarios) {
    ordered_json o;
    o["scenario_id"] = s.scenario_id;
    o["controller"] = s.controller;
    o["success"] = s.success;
    o["iterations_used"] = s.iterations_used;
    o["reconsiderations"] = s.reconsiderations;
    o["best_gains"] = s.best_gains;
    o["best_metrics"] = metrics_to_json(s.best_metrics);
    j["scenarios"].push_back(o);
  }
  return j.dump(2);
}

void write_final_report(const fs::path& path, const FinalReport& report) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write report: " + path.string());
  f << final_report_to_json(report) << "\n";
}

fs::path make_run_dir(const fs::path& base, const std::string& plant_id) {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream name;
  name << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-" << plant_id;
  fs::path dir = base / name.str();
  // Deduplicate on collision within the same second.
  int suffix = 1;
  fs::path candidate = dir;
  while (fs::exists(candidate))
    candidate = dir.string() + "-" + std::to_string(suffix++);
  fs::create_directories(candidate);
  return candidate;
}

// ---- Monte Carlo ------------------------------------------------------------

std::string ComparisonTable::to_csv() const {
  std::ostringstream os;
  os << "scenario,method,gains,mse,settling_time_s,overshoot_pct,"
        "control_effort,stable_fraction,runs\n";
  for (const auto& r : rows) {
    std::ostringstream g;
    bool first = true;
    for (const auto& [name, value] : r.gains) {
      g << (first ? "" : " ") << name << "=" << fmt_trimmed(value);
      first = false;
    }
    os << r.scenario << "," << r.method << "," << g.str() << ","
       << fmt_fixed(r.mse, 4) << "," << fmt_fixed(r.settling_time, 2) << ","
       << fmt_fixed(r.overshoot, 2) << "," << fmt_fixed(r.control_effort, 2)
       << "," << fmt_fixed(r.stable_fraction, 3) << "," << r.runs << "\n";
  }
  return os.str();
}

std::string ComparisonTable::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(22) << "Scenario" << std::setw(16) << "Method"
     << std::setw(10) << "MSE" << std::setw(10) << "Ts(s)" << std::setw(10)
     << "Mp(%)" << std::setw(10) << "Stable" << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(22) << r.scenario << std::setw(16) << r.method
       << std::setw(10) << fmt_fixed(r.mse, 4) << std::setw(10)
       << fmt_fixed(r.settling_time, 2) << std::setw(10)
       << fmt_fixed(r.overshoot, 2) << std::setw(10)
       << fmt_fixed(r.stable_fraction, 2) << "\n";
  }
  return os.str();
}

ComparisonTable run_monte_carlo(const PlantModel& plant,
                                const std::vector<MethodSpec>& methods,
                                const std::vector<Scenario>& scenarios,
                                const SimConfig& sim, std::uint64_t seed0,
                                int runs, int jobs) {
  if (runs < 1) throw ConfigError("monte carlo: runs must be >= 1");
  if (jobs < 1) jobs = 1;
  ComparisonTable table;

  for (const auto& scenario : scenarios) {
    for (const auto& method : methods) {
      ControllerSpec spec{method.kind, method.gains, {}};
      std::vector<TrajectoryMetrics> results(runs);
      std::atomic<int> next{0};
      auto worker = [&]() {
        for (int k = next.fetch_add(1); k < runs; k = next.fetch_add(1)) {
          const auto traj =
              run_episode(plant, spec, scenario, sim, seed0 + k);
          results[k] = compute_metrics(traj);
        }
      };
      std::vector<std::thread> pool;
      const int n_threads = std::min(jobs, runs);
      pool.reserve(n_threads);
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();

      ComparisonRow row;
      row.scenario = scenario.id;
      row.method = method.name;
      row.gains = method.gains;
      row.runs = runs;
      int stable = 0;
      int settled = 0;
      for (const auto& m : results) {
        row.mse += m.mse;
        row.overshoot += m.overshoot;
        row.control_effort += m.control_effort;
        if (std::isfinite(m.settling_time)) {
          row.settling_time += m.settling_time;
          ++settled;
        }
        if (m.stable) ++stable;
      }
      row.mse /= runs;
      row.overshoot /= runs;
      row.control_effort /= runs;
      row.settling_time =
          settled > 0 ? row.settling_time / settled : kInf;
      row.stable_fraction = static_cast<double>(stable) / runs;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

// ---- Plot data and replay comparison ----------------------------------------

std::string evolution_csv_from_run(const fs::path& run_dir) {
  std::ifstream f(run_dir / "iterations.jsonl");
  if (!f)
    throw ConfigError("run directory has no iterations.jsonl: " +
                      run_dir.string());
  std::vector<json> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("malformed iterations.jsonl line");
    rows.push_back(std::move(j));
  }
  if (rows.empty()) throw ConfigError("iterations.jsonl is empty");

  std::vector<std::string> gain_names;
  for (const auto& [name, unused] : rows.front()["gains"].items())
    gain_names.push_back(name);

  std::ostringstream os;
  os << "iter";
  for (const auto& g : gain_names) os << "," << g;
  os << ",mse,settling_time,overshoot,stable\n";
  int global_index = 0;
  for (const auto& r : rows) {
    os << ++global_index;
    for (const auto& g : gain_names) {
      os << ",";
      if (r["gains"].contains(g)) os << r["gains"][g].get<double>();
    }
    const auto& m = r["metrics"];
    auto metric = [&](const char* key) -> std::string {
      if (m[key].is_string()) return m[key].get<std::string>();
      return fmt_trimmed(m[key].get<double>());
    };
    os << "," << metric("mse") << "," << metric("settling_time") << ","
       << metric("overshoot") << "," << (m["stable"].get<bool>() ? 1 : 0)
       << "\n";
  }
  return os.str();
}

std::vector<ReferenceLogLine> parse_reference_log(std::istream& is) {
  std::vector<ReferenceLogLine> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find('#') == std::string::npos || line.find('|') == std::string::npos)
      continue;
    ReferenceLogLine ref;
    std::istringstream ls(line);
    std::string token;
    bool first = true;
    while (std::getline(ls, token, '|')) {
      // trim
      const auto b = token.find_first_not_of(" \t");
      const auto e = token.find_last_not_of(" \t\r");
      if (b == std::string::npos) continue;
      token = token.substr(b, e - b + 1);
      if (first) {
        first = false;
        std::sscanf(token.c_str(), "#%d/", &ref.iteration);
        continue;
      }
      const auto colon = token.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = token.substr(0, colon);
      const std::string value = token.substr(colon + 1);
      if (key == "Type") {
        ref.type = value;
      } else if (key == "isStb") {
        ref.stable = (value == "True" || value == "true");
      } else {
        const double v = (value == "inf") ? kInf : std::strtod(value.c_str(), nullptr);
        if (key == "Kp" || key == "Ki" || key == "Kd" ||
            (key.size() >= 2 && key[0] == 'K' && std::isdigit(key[1])))
          ref.gains[key] = v;
        else
          ref.metrics[key] = v;
      }
    }
    if (ref.iteration > 0) out.push_back(std::move(ref));
  }
  return out;
}

std::string ComparisonReport::to_json() const {
  ordered_json j;
  j["decisions_match"] = decisions_match;
  j["notes"] = notes;
  j["field_deviations"] = ordered_json::array();
  for (const auto& d : deviations) {
    ordered_json o;
    o["iteration"] = d.iteration;
    o["field"] = d.field;
    o["reference"] = std::isinf(d.reference) ? ordered_json("inf")
                                             : ordered_json(d.reference);
    o["recomputed"] = std::isinf(d.recomputed) ? ordered_json("inf")
                                               : ordered_json(d.recomputed);
    o["relative"] = std::isfinite(d.relative) ? ordered_json(d.relative)
                                              : ordered_json("inf");
    j["field_deviations"].push_back(o);
  }
  return j.dump(2);
}

ComparisonReport compare_with_reference(
    const std::vector<ReferenceLogLine>& reference,
    const std::vector<IterationRecord>& recomputed) {
  ComparisonReport report;
  const std::size_t n = std::min(reference.size(), recomputed.size());
  if (reference.size() != recomputed.size()) {
    report.notes.push_back(
        "iteration count mismatch: reference " +
        std::to_string(reference.size()) + ", recomputed " +
        std::to_string(recomputed.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ref = reference[i];
    const auto& rec = recomputed[i];
    auto add = [&](const std::string& field, double a, double b) {
      FieldDeviation d;
      d.iteration = ref.iteration;
      d.field = field;
      d.reference = a;
      d.recomputed = b;
      if (std::isinf(a) && std::isinf(b)) d.relative = 0.0;
      else if (a == 0.0) d.relative = (b == 0.0) ? 0.0 : kInf;
      else d.relative = std::abs(b - a) / std::abs(a);
      report.deviations.push_back(d);
    };
    auto metric = [&](const char* key, double v) {
      auto it = ref.metrics.find(key);
      if (it != ref.metrics.end()) add(key, it->second, v);
    };
    metric("MSE", rec.metrics.mse);
    metric("Ts", rec.metrics.settling_time);
    metric("Tr", rec.metrics.rise_time);
    metric("%OS", rec.metrics.overshoot);
    metric("ZC", rec.metrics.zero_crossings);
    metric("CZC", rec.metrics.control_zero_crossings);
    metric("CE", rec.metrics.control_effort);
    metric("e_ss", rec.metrics.ss_error);
    for (const auto& [name, value] : ref.gains) {
      auto it = rec.gains.find(name);
      if (it != rec.gains.end()) add(name, value, it->second);
    }
  }
  return report;
}

}  // namespace ctlopt
