#include "ctlopt/prompts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace ctlopt::detail {
const std::map<std::string, std::string_view>& embedded_prompts();
}

namespace ctlopt {

namespace {

std::string g_override_dir;
std::mutex g_override_mutex;

std::string replace_all(std::string text, const std::string& key,
                        const std::string& value) {
  const std::string token = "{{" + key + "}}";
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

using Vars = std::map<std::string, std::string>;

std::string render(const std::string& tmpl_name, const Vars& vars) {
  std::string text = prompt_template(tmpl_name);
  for (const auto& [key, value] : vars) text = replace_all(text, key, value);
  if (text.find("{{") != std::string::npos)
    throw std::logic_error("unresolved placeholder in template " + tmpl_name);
  return text;
}

const char* kArrow = " → ";  // separator for trend chains

std::string yes_no(bool b) { return b ? "Yes" : "No"; }

std::string join_chain(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += kArrow;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> ordered_gain_names(const PromptInputs& in) {
  return gain_names(in.controller_type, *in.plant);
}

std::string state_list(const PlantModel& plant) {
  std::string out;
  for (std::size_t i = 0; i < plant.state_names().size(); ++i) {
    if (i) out += ", ";
    out += plant.state_names()[i];
  }
  return out;
}

std::string controller_long_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::P: return "Proportional controller";
    case ControllerKind::PI: return "Proportional-Integral controller";
    case ControllerKind::PD: return "Proportional-Derivative controller";
    case ControllerKind::PID:
      return "Proportional-Integral-Derivative controller";
    case ControllerKind::FSF: return "Full-State Feedback controller";
  }
  return "?";
}

std::string controller_details(const PromptInputs& in) {
  const auto& plant = *in.plant;
  std::ostringstream os;
  if (in.controller_type == ControllerKind::FSF) {
    const auto names = ordered_gain_names(in);
    os << "FULL-STATE FEEDBACK DETAILS:\n- Control gains: ";
    for (std::size_t i = 0; i < names.size(); ++i)
      os << (i ? ", " : "") << names[i];
    os << "\n- Control law: u = ";
    for (std::size_t i = 0; i < names.size(); ++i)
      os << (i ? " - " : "-") << names[i] << "*x" << (i + 1);
    os << "\n";
    if (plant.id() == PlantId::Pendulum) {
      os << "- K1 controls feedback from theta\n"
         << "- K2 controls feedback from the filtered theta derivative "
            "estimate\n";
    } else {
      for (std::size_t i = 0; i < names.size(); ++i)
        os << "- " << names[i] << " controls feedback from "
           << plant.state_names()[i] << "\n";
    }
  } else {
    os << to_string(in.controller_type) << " CONTROLLER DETAILS:\n"
       << "- Output feedback controller acting on the "
       << plant.state_names()[plant.regulated_index()] << " error\n"
       << "- Kp: Proportional gain (response speed vs overshoot)\n";
    if (in.controller_type == ControllerKind::PI ||
        in.controller_type == ControllerKind::PID)
      os << "- Ki: Integral gain (eliminates steady-state error)\n";
    if (in.controller_type == ControllerKind::PD ||
        in.controller_type == ControllerKind::PID)
      os << "- Kd: Derivative gain (damping and overshoot reduction)\n";
  }
  std::string text = os.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::string ranges_block(const PromptInputs& in, int decimals) {
  std::ostringstream os;
  bool first = true;
  for (const auto& name : ordered_gain_names(in)) {
    const auto it = in.ranges.find(name);
    if (it == in.ranges.end()) continue;
    if (!first) os << "\n";
    first = false;
    os << "- " << name << ": [" << fmt_fixed(it->second[0], decimals) << ", "
       << fmt_fixed(it->second[1], decimals) << "]";
  }
  return os.str();
}

std::string response_format(const PromptInputs& in) {
  std::ostringstream os;
  os << "{\n";
  for (const auto& name : ordered_gain_names(in))
    os << "    \"" << name << "\": value,\n";
  os << "    \"reasoning\": \"Detailed explanation of parameter choices\"\n}";
  return os.str();
}

std::string actor_history_section(const PromptInputs& in) {
  if (in.trend_window.empty()) return "\n";
  const auto& rows = in.trend_window;
  std::ostringstream os;
  os << "\nRECENT PERFORMANCE HISTORY (" << rows.size() << " attempts):\n";
  os << "Parameter Trends:\n";
  for (const auto& name : ordered_gain_names(in)) {
    std::vector<std::string> chain;
    for (const auto& row : rows) {
      auto it = row.gains.find(name);
      if (it != row.gains.end()) chain.push_back(fmt_fixed(it->second, 4));
    }
    os << "- " << name << ": " << join_chain(chain) << "\n";
  }
  os << "\nPerformance Trends:\n";
  auto metric_line = [&](const char* label, auto getter, int decimals) {
    std::vector<std::string> chain;
    for (const auto& row : rows)
      chain.push_back(fmt_fixed(getter(row.metrics), decimals));
    os << "- " << label << ": " << join_chain(chain) << "\n";
  };
  metric_line("Mse", [](const auto& m) { return m.mse; }, 4);
  metric_line("Settling Time", [](const auto& m) { return m.settling_time; }, 2);
  metric_line("Overshoot", [](const auto& m) { return m.overshoot; }, 4);
  {
    std::vector<std::string> zc, czc, stable;
    for (const auto& row : rows) {
      zc.push_back(std::to_string(row.metrics.zero_crossings));
      czc.push_back(std::to_string(row.metrics.control_zero_crossings));
      stable.push_back(yes_no(row.metrics.stable));
    }
    os << "- Zero Crossings: " << join_chain(zc) << "\n";
    os << "- Control Zero Crossings: " << join_chain(czc) << "\n";
    metric_line("Control Effort", [](const auto& m) { return m.control_effort; }, 4);
    os << "- Stable: " << join_chain(stable) << "\n";
  }
  return os.str();
}

std::string actor_feedback_section(const PromptInputs& in) {
  if (!in.latest_feedback) return "";
  const auto& fb = *in.latest_feedback;
  std::ostringstream os;
  os << "\nLATEST FEEDBACK:\n- Strategy: " << to_string(fb.strategy) << "\n"
     << "- Analysis: " << fb.result_analysis << "\n- Suggestions:\n";
  for (const auto& s : fb.suggested_improvements) os << "  • " << s << "\n";
  return os.str();
}

std::string best_attempt_lines(const PromptInputs& in) {
  std::ostringstream os;
  int rank = 1;
  for (const auto& rec : in.best_attempts) {
    os << "Best #" << rank++ << " (Iteration #" << rec.iteration << "):\n"
       << "- Parameters: ";
    bool first = true;
    for (const auto& name : ordered_gain_names(in)) {
      auto it = rec.gains.find(name);
      if (it == rec.gains.end()) continue;
      os << (first ? "" : ", ") << name << "=" << fmt_fixed(it->second, 4);
      first = false;
    }
    os << "\n- Performance: MSE=" << fmt_fixed(rec.metrics.mse, 4)
       << ", Settling Time=" << fmt_fixed(rec.metrics.settling_time, 2)
       << "s, Stable=" << yes_no(rec.metrics.stable) << "\n\n";
  }
  return os.str();
}

std::string actor_best_section(const PromptInputs& in) {
  if (in.best_attempts.empty()) return "";
  return "\nBEST PERFORMING ATTEMPTS:\n" + best_attempt_lines(in);
}

std::string critic_metrics_block(const TrajectoryMetrics& m,
                                 const Targets& targets,
                                 bool with_targets) {
  std::ostringstream os;
  os << "- Mean Squared Error: " << fmt_fixed(m.mse, 4);
  if (with_targets) os << " (Target: " << fmt_fixed(targets.mse, 4) << ")";
  os << "\n- Settling Time: " << fmt_fixed(m.settling_time, 2) << "s";
  if (with_targets)
    os << " (Target: " << fmt_fixed(targets.settling_time, 2) << "s)";
  os << "\n- Maximum Overshoot: " << fmt_fixed(m.overshoot, 4) << " rad";
  if (with_targets) os << " (Target: " << fmt_fixed(targets.overshoot, 4) << " rad)";
  os << "\n- Zero-Crossings: " << m.zero_crossings;
  if (with_targets)
    os << "\n- Control Signal Zero-Crossings: " << m.control_zero_crossings;
  os << "\n- Control Effort: " << fmt_fixed(m.control_effort, 4)
     << "\n- System Stable: " << yes_no(m.stable);
  return os.str();
}

std::string critic_trend_section(const PromptInputs& in) {
  if (in.trend_window.empty()) return "No previous attempts available.\n";
  std::ostringstream os;
  os << "TREND FROM PREVIOUS " << in.trend_window.size() << " RESULTS:\n";
  os << "Parameters:\n";
  for (const auto& name : ordered_gain_names(in)) {
    std::vector<std::string> chain;
    for (const auto& row : in.trend_window) {
      auto it = row.gains.find(name);
      if (it != row.gains.end()) chain.push_back(fmt_fixed(it->second, 4));
    }
    os << name << ": " << join_chain(chain) << "\n";
  }
  os << "\nMetrics:\n";
  auto line = [&](const char* label, auto getter, int decimals) {
    std::vector<std::string> chain;
    for (const auto& row : in.trend_window)
      chain.push_back(fmt_fixed(getter(row.metrics), decimals));
    os << label << ": " << join_chain(chain) << "\n";
  };
  line("mse", [](const auto& m) { return m.mse; }, 4);
  line("settling_time", [](const auto& m) { return m.settling_time; }, 4);
  line("overshoot", [](const auto& m) { return m.overshoot; }, 4);
  line("stable", [](const auto& m) { return m.stable ? 1.0 : 0.0; }, 4);
  line("zero_crossings",
       [](const auto& m) { return static_cast<double>(m.zero_crossings); }, 4);
  line("control_effort", [](const auto& m) { return m.control_effort; }, 4);
  line("control_zero_crossings",
       [](const auto& m) { return static_cast<double>(m.control_zero_crossings); },
       4);
  return os.str();
}

std::string critic_best_section(const PromptInputs& in) {
  if (in.best_attempts.empty()) return "No best performance yet.\n";
  const auto& best = in.best_attempts.front();
  std::ostringstream os;
  os << "BEST PERFORMANCE SO FAR:\nParameters:\n";
  bool first = true;
  for (const auto& name : ordered_gain_names(in)) {
    auto it = best.gains.find(name);
    if (it == best.gains.end()) continue;
    os << (first ? "" : ", ") << name << " = " << fmt_fixed(it->second, 4);
    first = false;
  }
  os << "\n\nMetrics:\n- Mean Squared Error: " << fmt_fixed(best.metrics.mse, 4)
     << "\n- Settling Time: " << fmt_fixed(best.metrics.settling_time, 2) << "s"
     << "\n- Maximum Overshoot: " << fmt_fixed(best.metrics.overshoot, 4)
     << " rad"
     << "\n- Zero-Crossings: " << best.metrics.zero_crossings
     << "\n- Control Effort: " << fmt_fixed(best.metrics.control_effort, 4)
     << "\n- System Stable: " << yes_no(best.metrics.stable) << "\n";
  return os.str();
}

std::string terminator_trend_section(const PromptInputs& in) {
  if (in.trend_window.size() < 2) return "";
  std::ostringstream os;
  os << "TREND FROM PREVIOUS " << in.trend_window.size() << " RESULTS:\n";
  os << "Parameters:\n";
  for (const auto& name : ordered_gain_names(in)) {
    std::vector<std::string> chain;
    for (const auto& row : in.trend_window) {
      auto it = row.gains.find(name);
      if (it != row.gains.end()) chain.push_back(fmt_fixed(it->second, 4));
    }
    os << name << ": " << join_chain(chain) << "\n";
  }
  os << "\nMetrics:\n";
  auto line = [&](const char* label, auto getter, int decimals) {
    std::vector<std::string> chain;
    for (const auto& row : in.trend_window)
      chain.push_back(fmt_fixed(getter(row.metrics), decimals));
    os << label << ": " << join_chain(chain) << "\n";
  };
  line("mse", [](const auto& m) { return m.mse; }, 4);
  line("settling_time", [](const auto& m) { return m.settling_time; }, 2);
  line("overshoot", [](const auto& m) { return m.overshoot; }, 4);
  line("stable", [](const auto& m) { return m.stable ? 1.0 : 0.0; }, 4);
  line("zero_crossings",
       [](const auto& m) { return static_cast<double>(m.zero_crossings); }, 4);
  line("control_effort", [](const auto& m) { return m.control_effort; }, 4);
  line("control_zero_crossings",
       [](const auto& m) { return static_cast<double>(m.control_zero_crossings); },
       4);
  os << "\n";
  return os.str();
}

std::string analysis_json(const ImprovementReport& imp) {
  std::ostringstream os;
  os << "{\n  \"mse_change\": " << fmt_trimmed(imp.mse_change)
     << ",\n  \"settling_time_change\": " << fmt_trimmed(imp.settling_time_change)
     << ",\n  \"overshoot_change\": " << fmt_trimmed(imp.overshoot_change)
     << ",\n  \"iterations_analyzed\": " << imp.iterations_analyzed << "\n}";
  return os.str();
}

std::string convergence_json(const ConvergenceReport& conv,
                             const std::vector<std::string>& order) {
  std::ostringstream os;
  os << "{\n  \"parameter_changes\": {";
  bool first = true;
  for (const auto& name : order) {
    auto it = conv.parameter_changes.find(name);
    if (it == conv.parameter_changes.end()) continue;
    os << (first ? "" : ",") << "\n    \"" << name
       << "\": " << fmt_trimmed(it->second);
    first = false;
  }
  os << "\n  },\n  \"max_change_percent\": " << fmt_trimmed(conv.max_change_percent)
     << ",\n  \"converged\": " << (conv.converged ? "true" : "false")
     << ",\n  \"iterations_analyzed\": " << conv.iterations_analyzed << "\n}";
  return os.str();
}

std::string terminator_analysis_section(const PromptInputs& in) {
  if (!in.improvement || !in.convergence) return "";
  std::ostringstream os;
  os << "IMPROVEMENT ANALYSIS:\n" << analysis_json(*in.improvement) << "\n"
     << "PARAMETER CONVERGENCE ANALYSIS:\n"
     << convergence_json(*in.convergence, ordered_gain_names(in)) << "\n\n";
  return os.str();
}

std::string params_inline(const PromptInputs& in,
                          const std::map<std::string, double>& params) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& name : ordered_gain_names(in)) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    os << (first ? "" : ", ") << name << ": " << fmt_trimmed(it->second);
    first = false;
  }
  os << "}";
  return os.str();
}

std::string available_controllers_block(const PromptInputs& in) {
  std::ostringstream os;
  bool first_line = true;
  for (auto kind : {ControllerKind::P, ControllerKind::PI, ControllerKind::PD,
                    ControllerKind::PID, ControllerKind::FSF}) {
    GainRanges ranges;
    try {
      ranges = default_ranges(kind, *in.plant);
    } catch (const std::invalid_argument&) {
      continue;
    }
    if (!first_line) os << "\n";
    first_line = false;
    os << "- " << to_string(kind) << ": " << controller_long_name(kind) << " (";
    bool first = true;
    for (const auto& name : gain_names(kind, *in.plant)) {
      const auto& r = ranges.at(name);
      os << (first ? "" : ", ") << name << ": [" << fmt_trimmed(r[0]) << ", "
         << fmt_trimmed(r[1]) << "]";
      first = false;
    }
    os << ")";
  }
  return os.str();
}

std::string ranges_json(const PromptInputs& in) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& name : ordered_gain_names(in)) {
    auto it = in.ranges.find(name);
    if (it == in.ranges.end()) continue;
    os << (first ? "" : ",") << "\n  \"" << name << "\": ["
       << fmt_trimmed(it->second[0]) << ", " << fmt_trimmed(it->second[1])
       << "]";
    first = false;
  }
  os << "\n}";
  return os.str();
}

std::string stats_json(const PromptInputs& in) {
  std::ostringstream os;
  os << "{";
  for (const auto& name : ordered_gain_names(in)) {
    auto it = in.parameter_stats.find(name);
    if (it == in.parameter_stats.end()) continue;
    os << "\n  \"" << name << "\": {\"min\": " << fmt_trimmed(it->second.min)
       << ", \"max\": " << fmt_trimmed(it->second.max)
       << ", \"mean\": " << fmt_trimmed(it->second.mean)
       << ", \"std\": " << fmt_trimmed(it->second.std_dev) << "},";
  }
  os << "\n  \"stability_rate\": " << fmt_trimmed(in.stability_rate) << "\n}";
  return os.str();
}

std::string juror_best_json(const PromptInputs& in) {
  if (in.best_attempts.empty()) return "null";
  const auto& best = in.best_attempts.front();
  std::ostringstream os;
  os << "{\n  \"params\": {";
  bool first = true;
  for (const auto& name : ordered_gain_names(in)) {
    auto it = best.gains.find(name);
    if (it == best.gains.end()) continue;
    os << (first ? "" : ",") << "\n    \"" << name
       << "\": " << fmt_trimmed(it->second);
    first = false;
  }
  os << "\n  },\n  \"metrics\": {\n    \"mse\": "
     << fmt_trimmed(best.metrics.mse)
     << ",\n    \"settling_time\": " << fmt_trimmed(best.metrics.settling_time)
     << ",\n    \"rise_time\": " << fmt_trimmed(best.metrics.rise_time)
     << ",\n    \"overshoot\": " << fmt_trimmed(best.metrics.overshoot)
     << ",\n    \"stable\": " << (best.metrics.stable ? "true" : "false")
     << "\n  }\n}";
  return os.str();
}

std::string scenario_stage(int level) {
  switch (level) {
    case 1: return "initial";
    case 2: return "intermediate";
    default: return "advanced";
  }
}

Vars common_vars(const PromptInputs& in) {
  Vars v;
  v["system_name"] = in.plant->display_name();
  v["system_description"] = in.plant->description();
  v["state_count"] = std::to_string(in.plant->state_dim());
  v["state_list"] = state_list(*in.plant);
  v["input_name"] = in.plant->input_name();
  v["controller_type"] = to_string(in.controller_type);
  v["iteration"] = std::to_string(in.iteration);
  v["max_iterations"] = std::to_string(in.max_iterations);
  v["min_iterations"] = std::to_string(in.min_iterations);
  return v;
}

}  // namespace

std::string fmt_fixed(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string fmt_trimmed(double v) {
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  std::string s = fmt_fixed(v, 4);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.push_back('0');
  return s;
}

std::string prompt_template(const std::string& name) {
  {
    std::lock_guard<std::mutex> lock(g_override_mutex);
    if (!g_override_dir.empty()) {
      std::ifstream f(g_override_dir + "/" + name + ".tmpl");
      if (f) {
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
      }
    }
  }
  const auto& table = detail::embedded_prompts();
  auto it = table.find(name);
  if (it == table.end())
    throw std::invalid_argument("unknown prompt template: " + name);
  return std::string(it->second);
}

void set_prompt_override_dir(const std::string& dir) {
  std::lock_guard<std::mutex> lock(g_override_mutex);
  g_override_dir = dir;
}

RenderedPrompt render_prompt(AgentRole role, const PromptInputs& in) {
  if (in.plant == nullptr)
    throw std::invalid_argument("render_prompt: plant required");
  Vars v = common_vars(in);
  RenderedPrompt out;
  switch (role) {
    case AgentRole::Actor: {
      out.system_text = render("actor_system", v);
      v["controller_details"] = controller_details(in);
      v["ranges_block"] = ranges_block(in, 4);
      v["history_section"] = actor_history_section(in);
      v["feedback_section"] = actor_feedback_section(in);
      v["best_section"] = actor_best_section(in);
      v["response_format"] = response_format(in);
      out.user_text = render("actor_user", v);
      break;
    }
    case AgentRole::Critic: {
      out.system_text = render("critic_system", v);
      v["ranges_block"] = ranges_block(in, 2);
      {
        std::ostringstream os;
        bool first = true;
        for (const auto& name : ordered_gain_names(in)) {
          auto it = in.current_gains.find(name);
          if (it == in.current_gains.end()) continue;
          os << (first ? "" : ", ") << name << " = "
             << fmt_fixed(it->second, 4);
          first = false;
        }
        v["current_params"] = os.str();
      }
      v["trend_section"] = critic_trend_section(in);
      v["best_section"] = critic_best_section(in);
      v["metrics_block"] = in.current_metrics
                               ? critic_metrics_block(*in.current_metrics,
                                                      in.targets, true)
                               : std::string("(no metrics available)");
      v["recommended_strategy"] = to_string(in.recommended_strategy);
      out.user_text = render("critic_user", v);
      break;
    }
    case AgentRole::Terminator: {
      out.system_text = render("terminator_system", v);
      const auto& m = in.current_metrics.value();
      const auto check = meets_targets(m, in.targets);
      v["mse_target"] = fmt_fixed(in.targets.mse, 6);
      v["ts_target"] = fmt_fixed(in.targets.settling_time, 2);
      v["os_target"] = fmt_fixed(in.targets.overshoot, 4);
      v["mse_target_short"] = fmt_trimmed(in.targets.mse);
      v["ts_target_short"] = fmt_trimmed(in.targets.settling_time);
      v["os_target_short"] = fmt_trimmed(in.targets.overshoot);
      v["mse"] = fmt_fixed(m.mse, 6);
      v["ts"] = fmt_fixed(m.settling_time, 2);
      v["os"] = fmt_fixed(m.overshoot, 4);
      v["mse_status"] = check.mse ? "SUCCESS" : "NOT YET";
      v["ts_status"] = check.settling_time ? "SUCCESS" : "NOT YET";
      v["os_status"] = check.overshoot ? "SUCCESS" : "NOT YET";
      v["stable"] = yes_no(m.stable);
      v["zc"] = std::to_string(m.zero_crossings);
      v["czc"] = std::to_string(m.control_zero_crossings);
      v["ce"] = fmt_fixed(m.control_effort, 4);
      v["strategy"] = in.latest_feedback
                          ? to_string(in.latest_feedback->strategy)
                          : std::string("UNKNOWN");
      v["trend_section"] = terminator_trend_section(in);
      v["analysis_section"] = terminator_analysis_section(in);
      out.user_text = render("terminator_user", v);
      break;
    }
    case AgentRole::Juror: {
      out.system_text = render("juror_system", v);
      v["ranges_json"] = ranges_json(in);
      v["stats_json"] = stats_json(in);
      v["best_json"] = juror_best_json(in);
      v["total_iterations"] = std::to_string(in.total_iterations);
      v["reconsiderations"] = std::to_string(in.reconsiderations);
      out.user_text = render("juror_user", v);
      break;
    }
    case AgentRole::Selector: {
      out.system_text = render("selector_system", v);
      v["mse_target"] = fmt_trimmed(in.targets.mse);
      v["ts_target"] = fmt_fixed(in.targets.settling_time, 2);
      v["os_target"] = fmt_trimmed(in.targets.overshoot);
      v["available_block"] = available_controllers_block(in);
      out.user_text = render("selector_user", v);
      break;
    }
    case AgentRole::Scenarist: {
      out.system_text = render("scenarist_system", v);
      v["params_inline"] = params_inline(in, in.selected_parameters);
      v["scenario_difficulty"] =
          in.scenario_level <= 1 ? "nominal" : "challenging";
      v["scenario_stage"] = scenario_stage(in.scenario_level);
      out.user_text = render("scenarist_user", v);
      break;
    }
  }
  return out;
}

}  // namespace ctlopt
