#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ctlopt/controllers.hpp"
#include "ctlopt/scenario.hpp"

namespace ctlopt {

enum class AgentRole { Selector, Scenarist, Actor, Critic, Terminator, Juror };

std::string to_string(AgentRole role);
AgentRole agent_role_from_string(const std::string& s);

/// Raised when no JSON object can be extracted from a model response.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Raised when extracted JSON does not satisfy the role's schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Strategy { Explore, Exploit };
std::string to_string(Strategy s);

enum class TerminatorDecision { TerminateSuccess, TerminateRedesign, Continue };
std::string to_string(TerminatorDecision d);

enum class JurorDecision { ReconsiderRange, ExploreFurther };
std::string to_string(JurorDecision d);

struct ActorProposal {
  std::map<std::string, double> gains;
  std::string reasoning;
  bool operator==(const ActorProposal&) const = default;
};

struct CriticFeedback {
  Strategy strategy = Strategy::Explore;
  std::string result_analysis;
  std::vector<std::string> suggested_improvements;
  bool operator==(const CriticFeedback&) const = default;
};

struct TerminatorVerdict {
  TerminatorDecision decision = TerminatorDecision::Continue;
  std::string reasoning;
  std::string recommendations;
  bool operator==(const TerminatorVerdict&) const = default;
};

struct JurorVerdict {
  JurorDecision decision = JurorDecision::ExploreFurther;
  // Present iff decision == ReconsiderRange; may cover a subset of the gains.
  std::optional<GainRanges> new_range;
  std::string reasoning;
  bool operator==(const JurorVerdict&) const = default;
};

struct SelectorChoice {
  ControllerKind controller_type = ControllerKind::P;
  std::map<std::string, double> parameters;
  std::string reasoning;
  bool operator==(const SelectorChoice&) const = default;
};

struct ScenaristScenario {
  Scenario scenario;
  std::string reasoning;
  bool operator==(const ScenaristScenario& o) const {
    return scenario.id == o.scenario.id && scenario.ic_lo == o.scenario.ic_lo &&
           scenario.ic_hi == o.scenario.ic_hi &&
           scenario.randomness_level == o.scenario.randomness_level &&
           scenario.disturbance_level == o.scenario.disturbance_level &&
           scenario.param_uncertainty == o.scenario.param_uncertainty &&
           reasoning == o.reasoning;
  }
};

using AgentMessage = std::variant<SelectorChoice, ScenaristScenario,
                                  ActorProposal, CriticFeedback,
                                  TerminatorVerdict, JurorVerdict>;

/// Extracts the first well-formed JSON object from a raw model response
/// (tolerates surrounding prose, think-tags, and markdown fences) and
/// validates it against the role's schema.
AgentMessage parse_agent_json(const std::string& raw, AgentRole expected);

// Typed convenience wrappers over parse_agent_json.
ActorProposal parse_actor(const std::string& raw);
CriticFeedback parse_critic(const std::string& raw);
TerminatorVerdict parse_terminator(const std::string& raw);
JurorVerdict parse_juror(const std::string& raw);
SelectorChoice parse_selector(const std::string& raw);
ScenaristScenario parse_scenarist(const std::string& raw);

/// Canonical UTF-8 JSON wire form (field names exactly as the agents emit).
std::string serialize(const AgentMessage& msg);

/// Clamps out-of-range gains to the range boundary. Returns one warning per
/// clamped gain; throws SchemaError when a declared gain is missing.
std::vector<std::string> clamp_to_ranges(ActorProposal& proposal,
                                         const std::vector<std::string>& names,
                                         const GainRanges& ranges);

}  // namespace ctlopt
