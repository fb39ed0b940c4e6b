#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ctlopt/prompts.hpp"
#include "ctlopt/protocol.hpp"

namespace ctlopt {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ReplayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChatEndpointConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;
  double temperature = 0.0;
  double backoff_base_s = 1.0;  // doubled per retry, with jitter

  void validate() const;
};

/// POSTs {model, messages, temperature} to {base_url}/chat/completions and
/// returns the first choice's message content. Retries 429/5xx/timeouts with
/// exponential backoff; other 4xx fail immediately.
std::string chat_complete(const ChatEndpointConfig& cfg,
                          const std::string& system_text,
                          const std::string& user_text);

/// Tunables of the rule-driven stand-in agents. Defaults codify the prompt
/// guidance; everything is overridable from the run configuration.
struct HeuristicConfig {
  double explore_fraction = 0.3;        // EXPLORE while iter <= frac*max
  double boundary_band_fraction = 0.15; // early explore lands this close to an edge
  double exploit_step_fraction = 0.05;  // of range width, halving over the run
  double juror_boundary_fraction = 0.10;
  double juror_stability_threshold = 0.30;
  double juror_shrink = 0.5;            // new width = shrink * old width
  // Under noisy scenarios the oscillation gate moves to control zero
  // crossings, since error-signal crossings mostly count noise there.
  int zc_success_limit = 5;
  int czc_noisy_limit = 10;
};

ActorProposal heuristic_actor(const PromptInputs& in, std::uint64_t seed,
                              const HeuristicConfig& cfg = {});
CriticFeedback heuristic_critic(const PromptInputs& in,
                                const HeuristicConfig& cfg = {});
TerminatorVerdict heuristic_terminator(const PromptInputs& in,
                                       const HeuristicConfig& cfg = {});
JurorVerdict heuristic_juror(const PromptInputs& in,
                             const GainRanges& global_limits,
                             const HeuristicConfig& cfg = {});

/// One backend implementation for an agent role. respond() takes both the
/// structured context and its rendered prompt and returns the raw response
/// text, which the orchestrator parses against the role schema.
class AgentBackend {
public:
  virtual ~AgentBackend() = default;
  virtual std::string kind() const = 0;
  virtual std::string respond(AgentRole role, const PromptInputs& inputs,
                              const RenderedPrompt& prompt) = 0;
};

class HeuristicBackend : public AgentBackend {
public:
  explicit HeuristicBackend(std::uint64_t seed, HeuristicConfig cfg = {})
      : seed_(seed), cfg_(cfg) {}
  std::string kind() const override { return "heuristic"; }
  std::string respond(AgentRole role, const PromptInputs& inputs,
                      const RenderedPrompt& prompt) override;

  const HeuristicConfig& config() const { return cfg_; }

private:
  std::uint64_t seed_;
  HeuristicConfig cfg_;
};

class LiveBackend : public AgentBackend {
public:
  explicit LiveBackend(ChatEndpointConfig cfg) : cfg_(std::move(cfg)) {}
  std::string kind() const override { return "live"; }
  std::string respond(AgentRole role, const PromptInputs& inputs,
                      const RenderedPrompt& prompt) override;

private:
  ChatEndpointConfig cfg_;
};

/// Replays recorded responses in order, per role. The transcript is JSONL of
/// {"role", "request_digest", "response"}.
class ReplayBackend : public AgentBackend {
public:
  explicit ReplayBackend(const std::string& transcript_path);
  std::string kind() const override { return "replay"; }
  std::string respond(AgentRole role, const PromptInputs& inputs,
                      const RenderedPrompt& prompt) override;

  std::size_t remaining(AgentRole role) const;

private:
  std::map<AgentRole, std::vector<std::string>> responses_;
  std::map<AgentRole, std::size_t> cursor_;
};

/// role -> backend assignment; all six roles must be bound.
struct AgentBinding {
  std::map<AgentRole, std::shared_ptr<AgentBackend>> backends;

  AgentBackend& at(AgentRole role) const;
  void validate() const;
};

/// FNV-1a digest of a rendered prompt, stored in transcripts for audit.
std::string prompt_digest(const RenderedPrompt& prompt);

}  // namespace ctlopt
