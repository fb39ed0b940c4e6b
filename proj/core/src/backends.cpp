#include "ctlopt/backends.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ctlopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const auto h = splitmix64(splitmix64(seed ^ (stream * 0x9e3779b97f4a7c15ull)) + index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

constexpr std::uint64_t kStreamExplore = 0xA1;
constexpr std::uint64_t kStreamExploit = 0xB2;
constexpr std::uint64_t kStreamSequence = 0xC3;

// Irrational stride for the per-gain low-discrepancy sequence.
double kronecker_alpha(int gain_index) {
  static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  const double s = std::sqrt(primes[gain_index % 8]);
  return s - std::floor(s);
}

bool explore_phase(const PromptInputs& in, const HeuristicConfig& cfg) {
  return static_cast<double>(in.iteration) <=
         cfg.explore_fraction * static_cast<double>(in.max_iterations);
}

Strategy decide_strategy(const PromptInputs& in, const HeuristicConfig& cfg) {
  const bool no_stable_best =
      in.best_attempts.empty() || !in.best_attempts.front().metrics.stable;
  return (explore_phase(in, cfg) || no_stable_best) ? Strategy::Explore
                                                    : Strategy::Exploit;
}

}  // namespace

ActorProposal heuristic_actor(const PromptInputs& in, std::uint64_t seed,
                              const HeuristicConfig& cfg) {
  ActorProposal p;
  const auto names = gain_names(in.controller_type, *in.plant);
  const Strategy strategy = in.latest_feedback ? in.latest_feedback->strategy
                                               : Strategy::Explore;
  const auto iter = static_cast<std::uint64_t>(in.iteration);

  if (strategy == Strategy::Explore) {
    const bool boundary_bias = explore_phase(in, cfg);
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto [lo, hi] = in.ranges.at(names[j]);
      const double width = hi - lo;
      double value;
      if (boundary_bias) {
        const double u = unit(seed, kStreamExplore, iter * 16 + j);
        value = (u < 0.5)
                    ? lo + width * (2.0 * u) * cfg.boundary_band_fraction
                    : hi - width * (2.0 * (1.0 - u)) * cfg.boundary_band_fraction;
      } else {
        const double s0 = unit(seed, kStreamSequence, j);
        const double x = s0 + kronecker_alpha(static_cast<int>(j)) * in.iteration;
        value = lo + width * (x - std::floor(x));
      }
      p.gains[names[j]] = std::clamp(value, lo, hi);
    }
    p.reasoning =
        "Exploring the permissible ranges, sampling toward unvisited regions "
        "to map the performance landscape.";
  } else {
    // Small perturbation of the best attempt; step shrinks as the run ages.
    const auto& best = in.best_attempts.front();
    const int halvings =
        std::min(3, (3 * std::max(0, in.iteration - 1)) /
                        std::max(1, in.max_iterations));
    const double step_frac =
        cfg.exploit_step_fraction / static_cast<double>(1 << halvings);
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto [lo, hi] = in.ranges.at(names[j]);
      const double width = hi - lo;
      const double center =
          std::clamp(best.gains.at(names[j]), lo, hi);
      const double u = unit(seed, kStreamExploit, iter * 16 + j);
      const double value = center + (2.0 * u - 1.0) * step_frac * width;
      p.gains[names[j]] = std::clamp(value, lo, hi);
    }
    p.reasoning =
        "Exploiting around the best-performing parameters with small, "
        "shrinking adjustments.";
  }
  return p;
}

CriticFeedback heuristic_critic(const PromptInputs& in,
                                const HeuristicConfig& cfg) {
  CriticFeedback f;
  f.strategy = decide_strategy(in, cfg);
  std::string analysis;
  if (in.current_metrics) {
    const auto& m = *in.current_metrics;
    const auto check = meets_targets(m, in.targets);
    analysis = "MSE " + fmt_fixed(m.mse, 4) + " vs target " +
               fmt_fixed(in.targets.mse, 4) + ", settling time " +
               fmt_fixed(m.settling_time, 2) + "s vs " +
               fmt_fixed(in.targets.settling_time, 2) + "s, overshoot " +
               fmt_fixed(m.overshoot, 2) + " vs " +
               fmt_fixed(in.targets.overshoot, 2) + ". The system is " +
               (m.stable ? "stable" : "not stable") + "; " +
               (check.all() ? "all targets are met."
                            : "targets are not yet met.");
  } else {
    analysis = "No metrics available yet.";
  }
  f.result_analysis = analysis;
  if (f.strategy == Strategy::Explore) {
    f.suggested_improvements = {
        "Test parameter values near the range boundaries to identify "
        "promising regions.",
        "Vary one parameter at a time across the permissible range to "
        "observe sensitivity."};
  } else {
    f.suggested_improvements = {
        "Apply small adjustments around the best-performing parameters.",
        "Reduce the adjustment size as the metrics stop improving."};
  }
  return f;
}

TerminatorVerdict heuristic_terminator(const PromptInputs& in,
                                       const HeuristicConfig& cfg) {
  TerminatorVerdict v;
  v.decision = TerminatorDecision::Continue;

  if (in.iteration < in.min_iterations) {
    v.reasoning = "Below the minimum required iterations; always CONTINUE.";
    v.recommendations = "Keep exploring the parameter space.";
    return v;
  }
  if (!in.latest_feedback) {
    v.reasoning = "No critic strategy available; defaulting to CONTINUE.";
    return v;
  }
  if (in.latest_feedback->strategy == Strategy::Explore) {
    v.reasoning =
        "The critic recommends EXPLORE, so termination would be premature.";
    v.recommendations = "Continue exploring promising parameter regions.";
    return v;
  }

  const auto& m = in.current_metrics.value();
  const bool targets_met = meets_targets(m, in.targets).all();
  const bool zc_ok = in.noisy_scenario
                         ? m.control_zero_crossings <= cfg.czc_noisy_limit
                         : m.zero_crossings <= cfg.zc_success_limit;
  const bool converged =
      in.convergence && in.convergence->max_change_percent <= 5.0;
  const bool not_converged_hard =
      in.convergence && in.convergence->max_change_percent > 20.0;

  if (targets_met && zc_ok && converged) {
    v.decision = TerminatorDecision::TerminateSuccess;
    v.reasoning =
        "All target metrics are met, oscillations are low, and the "
        "parameters have converged.";
    v.recommendations = "None; the controller meets the requirements.";
    return v;
  }
  const bool stalled = in.improvement && in.improvement->mse_change < 5.0;
  if ((!targets_met || !zc_ok || not_converged_hard) && stalled) {
    v.decision = TerminatorDecision::TerminateRedesign;
    v.reasoning =
        "Targets are unmet or the loop is oscillatory/unconverged, and MSE "
        "improvement over the recent window is below 5%.";
    v.recommendations =
        "Reconsider the parameter ranges or switch the controller type.";
    return v;
  }
  v.reasoning =
      "Progress is still being made under EXPLOIT; continuing optimization.";
  v.recommendations = "Fine-tune around the best-performing parameters.";
  return v;
}

JurorVerdict heuristic_juror(const PromptInputs& in,
                             const GainRanges& global_limits,
                             const HeuristicConfig& cfg) {
  JurorVerdict v;
  if (in.best_attempts.empty()) {
    v.decision = JurorDecision::ExploreFurther;
    v.reasoning = "No attempts recorded yet; keep exploring.";
    return v;
  }
  const auto& best = in.best_attempts.front();

  bool near_boundary = false;
  for (const auto& [name, range] : in.ranges) {
    auto it = best.gains.find(name);
    if (it == best.gains.end()) continue;
    const double width = range[1] - range[0];
    const double margin =
        std::min(it->second - range[0], range[1] - it->second);
    if (margin < cfg.juror_boundary_fraction * width) {
      near_boundary = true;
      break;
    }
  }
  const bool low_stability =
      in.stability_rate < cfg.juror_stability_threshold;

  if (!near_boundary && !low_stability) {
    v.decision = JurorDecision::ExploreFurther;
    v.reasoning =
        "The best attempt sits comfortably inside the current ranges and the "
        "stability rate is adequate; the current region is worth exploring "
        "further.";
    return v;
  }

  v.decision = JurorDecision::ReconsiderRange;
  GainRanges next;
  for (const auto& [name, range] : in.ranges) {
    auto it = best.gains.find(name);
    if (it == best.gains.end()) continue;
    const double width = range[1] - range[0];
    const double half = 0.5 * cfg.juror_shrink * width;
    double lo = it->second - half;
    double hi = it->second + half;
    auto limit_it = global_limits.find(name);
    if (limit_it != global_limits.end()) {
      lo = std::max(lo, limit_it->second[0]);
      hi = std::min(hi, limit_it->second[1]);
    }
    next[name] = {lo, hi};
  }
  v.new_range = next;
  v.reasoning = near_boundary
                    ? "The best attempt lies near a range boundary; shifting "
                      "the search box to center on it."
                    : "The stability rate in the current box is low; "
                      "narrowing the search around the best stable gains.";
  return v;
}

std::string HeuristicBackend::respond(AgentRole role,
                                      const PromptInputs& inputs,
                                      const RenderedPrompt&) {
  switch (role) {
    case AgentRole::Actor:
      return serialize(heuristic_actor(inputs, seed_, cfg_));
    case AgentRole::Critic:
      return serialize(heuristic_critic(inputs, cfg_));
    case AgentRole::Terminator:
      return serialize(heuristic_terminator(inputs, cfg_));
    case AgentRole::Juror:
      return serialize(heuristic_juror(inputs, inputs.global_limits, cfg_));
    case AgentRole::Selector: {
      // Defer to the configured controller queue: midpoint parameters.
      SelectorChoice choice;
      choice.controller_type = inputs.controller_type;
      for (const auto& [name, range] : inputs.ranges)
        choice.parameters[name] = 0.5 * (range[0] + range[1]);
      choice.reasoning = "Midpoint initial parameters for the queued type.";
      return serialize(choice);
    }
    case AgentRole::Scenarist: {
      const auto ladder = default_scenario_ladder(*inputs.plant);
      const auto idx = static_cast<std::size_t>(
          std::clamp(inputs.scenario_level - 1, 0,
                     static_cast<int>(ladder.size()) - 1));
      ScenaristScenario s;
      s.scenario = ladder[idx];
      s.reasoning = "Default ladder scenario for this level.";
      return serialize(s);
    }
  }
  throw std::logic_error("unreachable");
}

std::string LiveBackend::respond(AgentRole, const PromptInputs&,
                                 const RenderedPrompt& prompt) {
  return chat_complete(cfg_, prompt.system_text, prompt.user_text);
}

ReplayBackend::ReplayBackend(const std::string& transcript_path) {
  std::ifstream f(transcript_path);
  if (!f) throw ConfigError("cannot open transcript: " + transcript_path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("role") || !j.contains("response"))
      throw ConfigError("malformed transcript line: " + line);
    responses_[agent_role_from_string(j["role"].get<std::string>())]
        .push_back(j["response"].get<std::string>());
  }
}

std::string ReplayBackend::respond(AgentRole role, const PromptInputs&,
                                   const RenderedPrompt&) {
  auto it = responses_.find(role);
  const auto idx = cursor_[role];
  if (it == responses_.end() || idx >= it->second.size())
    throw ReplayError("transcript exhausted for role " + to_string(role));
  ++cursor_[role];
  return it->second[idx];
}

std::size_t ReplayBackend::remaining(AgentRole role) const {
  auto it = responses_.find(role);
  if (it == responses_.end()) return 0;
  auto c = cursor_.find(role);
  return it->second.size() - (c == cursor_.end() ? 0 : c->second);
}

AgentBackend& AgentBinding::at(AgentRole role) const {
  auto it = backends.find(role);
  if (it == backends.end() || !it->second)
    throw ConfigError("no backend bound for role " + to_string(role));
  return *it->second;
}

void AgentBinding::validate() const {
  for (auto role : {AgentRole::Selector, AgentRole::Scenarist, AgentRole::Actor,
                    AgentRole::Critic, AgentRole::Terminator, AgentRole::Juror})
    at(role);
}

std::string prompt_digest(const RenderedPrompt& prompt) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  feed(prompt.system_text);
  feed(prompt.user_text);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ctlopt
