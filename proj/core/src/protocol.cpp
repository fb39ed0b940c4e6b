#include "ctlopt/protocol.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace ctlopt {

using nlohmann::ordered_json;

std::string to_string(AgentRole role) {
  switch (role) {
    case AgentRole::Selector: return "selector";
    case AgentRole::Scenarist: return "scenarist";
    case AgentRole::Actor: return "actor";
    case AgentRole::Critic: return "critic";
    case AgentRole::Terminator: return "terminator";
    case AgentRole::Juror: return "juror";
  }
  return "?";
}

AgentRole agent_role_from_string(const std::string& s) {
  if (s == "selector") return AgentRole::Selector;
  if (s == "scenarist") return AgentRole::Scenarist;
  if (s == "actor") return AgentRole::Actor;
  if (s == "critic") return AgentRole::Critic;
  if (s == "terminator") return AgentRole::Terminator;
  if (s == "juror") return AgentRole::Juror;
  throw std::invalid_argument("unknown agent role: " + s);
}

std::string to_string(Strategy s) {
  return s == Strategy::Explore ? "EXPLORE" : "EXPLOIT";
}

std::string to_string(TerminatorDecision d) {
  switch (d) {
    case TerminatorDecision::TerminateSuccess: return "TERMINATE_SUCCESS";
    case TerminatorDecision::TerminateRedesign: return "TERMINATE_REDESIGN";
    case TerminatorDecision::Continue: return "CONTINUE";
  }
  return "?";
}

std::string to_string(JurorDecision d) {
  return d == JurorDecision::ReconsiderRange ? "RECONSIDER_RANGE"
                                             : "EXPLORE_FURTHER";
}

namespace {

// Finds the first balanced {...} substring that parses as JSON.
ordered_json extract_first_object(const std::string& raw) {
  for (std::size_t start = raw.find('{'); start != std::string::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          const auto candidate = raw.substr(start, i - start + 1);
          auto parsed = ordered_json::parse(candidate, nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;  // balanced but invalid; try the next '{'
        }
      }
    }
  }
  throw ParseError("no JSON object found in agent response");
}

std::string require_string(const ordered_json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    throw SchemaError(std::string("missing or non-string field: ") + field);
  return j[field].get<std::string>();
}

std::string optional_string(const ordered_json& j, const char* field) {
  if (j.contains(field) && j[field].is_string())
    return j[field].get<std::string>();
  return {};
}

double require_number(const ordered_json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number())
    throw SchemaError(std::string("missing or non-numeric field: ") + field);
  return j[field].get<double>();
}

GainRanges ranges_from_json(const ordered_json& j) {
  GainRanges out;
  for (const auto& [name, value] : j.items()) {
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
        !value[1].is_number())
      throw SchemaError("range for " + name + " is not [min, max]");
    const double lo = value[0].get<double>(), hi = value[1].get<double>();
    if (!(lo < hi)) throw SchemaError("range for " + name + " has min >= max");
    out[name] = {lo, hi};
  }
  return out;
}

}  // namespace

ActorProposal parse_actor(const std::string& raw) {
  const auto j = extract_first_object(raw);
  ActorProposal p;
  for (const auto& [key, value] : j.items()) {
    if (key == "reasoning") continue;
    if (value.is_number()) p.gains[key] = value.get<double>();
  }
  if (p.gains.empty())
    throw SchemaError("actor response contains no numeric gain fields");
  p.reasoning = optional_string(j, "reasoning");
  return p;
}

CriticFeedback parse_critic(const std::string& raw) {
  const auto j = extract_first_object(raw);
  CriticFeedback f;
  const auto strategy = require_string(j, "strategy");
  if (strategy == "EXPLORE") f.strategy = Strategy::Explore;
  else if (strategy == "EXPLOIT") f.strategy = Strategy::Exploit;
  else throw SchemaError("unknown critic strategy token: " + strategy);
  f.result_analysis = optional_string(j, "result_analysis");
  if (j.contains("suggested_improvements")) {
    if (!j["suggested_improvements"].is_array())
      throw SchemaError("suggested_improvements must be an array");
    for (const auto& s : j["suggested_improvements"])
      if (s.is_string()) f.suggested_improvements.push_back(s.get<std::string>());
  }
  return f;
}

TerminatorVerdict parse_terminator(const std::string& raw) {
  const auto j = extract_first_object(raw);
  TerminatorVerdict v;
  const auto decision = require_string(j, "decision");
  if (decision == "TERMINATE_SUCCESS")
    v.decision = TerminatorDecision::TerminateSuccess;
  else if (decision == "TERMINATE_REDESIGN")
    v.decision = TerminatorDecision::TerminateRedesign;
  else if (decision == "CONTINUE")
    v.decision = TerminatorDecision::Continue;
  else
    throw SchemaError("unknown terminator decision token: " + decision);
  v.reasoning = optional_string(j, "reasoning");
  v.recommendations = optional_string(j, "recommendations");
  return v;
}

JurorVerdict parse_juror(const std::string& raw) {
  const auto j = extract_first_object(raw);
  JurorVerdict v;
  const auto decision = require_string(j, "decision");
  if (decision == "RECONSIDER_RANGE")
    v.decision = JurorDecision::ReconsiderRange;
  else if (decision == "EXPLORE_FURTHER")
    v.decision = JurorDecision::ExploreFurther;
  else
    throw SchemaError("unknown juror decision token: " + decision);
  if (v.decision == JurorDecision::ReconsiderRange) {
    if (!j.contains("new_range") || !j["new_range"].is_object())
      throw SchemaError("RECONSIDER_RANGE requires a new_range object");
    v.new_range = ranges_from_json(j["new_range"]);
  } else if (j.contains("new_range") && j["new_range"].is_object() &&
             !j["new_range"].empty()) {
    throw SchemaError("EXPLORE_FURTHER must not carry a new_range");
  }
  v.reasoning = optional_string(j, "reasoning");
  return v;
}

SelectorChoice parse_selector(const std::string& raw) {
  const auto j = extract_first_object(raw);
  SelectorChoice c;
  c.controller_type =
      controller_kind_from_string(require_string(j, "controller_type"));
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object())
      throw SchemaError("selector parameters must be an object");
    for (const auto& [name, value] : j["parameters"].items())
      if (value.is_number()) c.parameters[name] = value.get<double>();
  }
  c.reasoning = optional_string(j, "reasoning");
  return c;
}

ScenaristScenario parse_scenarist(const std::string& raw) {
  const auto j = extract_first_object(raw);
  ScenaristScenario s;
  s.scenario.id = require_string(j, "id");
  s.scenario.randomness_level = require_number(j, "randomness_level");
  s.scenario.param_uncertainty = require_number(j, "param_uncertainty");
  s.scenario.disturbance_level = require_number(j, "disturbance_level");
  if (!j.contains("initial_condition_range") ||
      !j["initial_condition_range"].is_array() ||
      j["initial_condition_range"].size() != 2)
    throw SchemaError("initial_condition_range must be [lo, hi]");
  s.scenario.ic_lo = j["initial_condition_range"][0].get<double>();
  s.scenario.ic_hi = j["initial_condition_range"][1].get<double>();
  s.reasoning = optional_string(j, "reasoning");
  s.scenario.validate();
  return s;
}

AgentMessage parse_agent_json(const std::string& raw, AgentRole expected) {
  switch (expected) {
    case AgentRole::Selector: return parse_selector(raw);
    case AgentRole::Scenarist: return parse_scenarist(raw);
    case AgentRole::Actor: return parse_actor(raw);
    case AgentRole::Critic: return parse_critic(raw);
    case AgentRole::Terminator: return parse_terminator(raw);
    case AgentRole::Juror: return parse_juror(raw);
  }
  throw std::logic_error("unreachable");
}

std::string serialize(const AgentMessage& msg) {
  ordered_json j;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ActorProposal>) {
          for (const auto& [name, value] : m.gains) j[name] = value;
          j["reasoning"] = m.reasoning;
        } else if constexpr (std::is_same_v<T, CriticFeedback>) {
          j["strategy"] = to_string(m.strategy);
          j["result_analysis"] = m.result_analysis;
          j["suggested_improvements"] = m.suggested_improvements;
        } else if constexpr (std::is_same_v<T, TerminatorVerdict>) {
          j["decision"] = to_string(m.decision);
          j["reasoning"] = m.reasoning;
          j["recommendations"] = m.recommendations;
        } else if constexpr (std::is_same_v<T, JurorVerdict>) {
          j["decision"] = to_string(m.decision);
          if (m.new_range) {
            ordered_json ranges;
            for (const auto& [name, range] : *m.new_range)
              ranges[name] = {range[0], range[1]};
            j["new_range"] = ranges;
          } else {
            j["new_range"] = nullptr;
          }
          j["reasoning"] = m.reasoning;
        } else if constexpr (std::is_same_v<T, SelectorChoice>) {
          j["controller_type"] = to_string(m.controller_type);
          j["parameters"] = m.parameters;
          j["reasoning"] = m.reasoning;
        } else if constexpr (std::is_same_v<T, ScenaristScenario>) {
          j["id"] = m.scenario.id;
          j["randomness_level"] = m.scenario.randomness_level;
          j["param_uncertainty"] = m.scenario.param_uncertainty;
          j["initial_condition_range"] = {m.scenario.ic_lo, m.scenario.ic_hi};
          j["disturbance_level"] = m.scenario.disturbance_level;
          j["reasoning"] = m.reasoning;
        }
      },
      msg);
  return j.dump();
}

std::vector<std::string> clamp_to_ranges(ActorProposal& proposal,
                                         const std::vector<std::string>& names,
                                         const GainRanges& ranges) {
  std::vector<std::string> warnings;
  for (const auto& name : names) {
    auto it = proposal.gains.find(name);
    if (it == proposal.gains.end())
      throw SchemaError("actor proposal missing gain: " + name);
    const auto range_it = ranges.find(name);
    if (range_it == ranges.end()) continue;
    const auto [lo, hi] = range_it->second;
    const double v = it->second;
    if (v < lo || v > hi) {
      const double clamped = std::clamp(v, lo, hi);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s=%g outside [%g, %g], clamped to %g",
                    name.c_str(), v, lo, hi, clamped);
      warnings.emplace_back(buf);
      it->second = clamped;
    }
  }
  return warnings;
}

}  // namespace ctlopt
