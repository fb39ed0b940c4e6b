#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctlopt/backends.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace ctlopt;

namespace {

std::string data_path(const std::string& rel) {
  return std::string(CTLOPT_TEST_DATA_DIR) + "/" + rel;
}

PromptInputs actor_inputs(const PlantModel& plant, int iteration, int max_iter) {
  PromptInputs in;
  in.plant = &plant;
  in.controller_type = ControllerKind::P;
  in.ranges = {{"Kp", {10.0, 60.0}}};
  in.global_limits = in.ranges;
  in.iteration = iteration;
  in.max_iterations = max_iter;
  in.min_iterations = 6;
  in.targets = {0.9, 3.0, 10.0};
  return in;
}

IterationRecord stable_record(double kp, double mse) {
  IterationRecord r;
  r.iteration = 1;
  r.gains = {{"Kp", kp}};
  r.metrics.mse = mse;
  r.metrics.settling_time = 3.7;
  r.metrics.overshoot = 10.5;
  r.metrics.zero_crossings = 4;
  r.metrics.control_zero_crossings = 4;
  r.metrics.stable = true;
  return r;
}

}  // namespace

TEST_CASE("early exploration proposes near a range boundary") {
  PlantModel plant = PlantModel::from_name("dc_motor");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto in = actor_inputs(plant, 1, 30);
    const auto p = heuristic_actor(in, seed);
    const double kp = p.gains.at("Kp");
    CHECK(kp >= 10.0);
    CHECK(kp <= 60.0);
    const double width = 50.0;
    const double margin = std::min(kp - 10.0, 60.0 - kp);
    CHECK(margin <= 0.15 * width + 1e-12);
  }
}

TEST_CASE("exploit stays within 5% of the range width around the best") {
  PlantModel plant = PlantModel::from_name("dc_motor");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto in = actor_inputs(plant, 20, 30);
    CriticFeedback fb;
    fb.strategy = Strategy::Exploit;
    in.latest_feedback = fb;
    in.best_attempts = {stable_record(12.5, 0.91)};
    const auto p = heuristic_actor(in, seed);
    CHECK(std::abs(p.gains.at("Kp") - 12.5) <= 0.05 * 50.0 + 1e-12);
  }
}

TEST_CASE("heuristic actor is deterministic in the seed") {
  PlantModel plant = PlantModel::from_name("ball_beam");
  PromptInputs in;
  in.plant = &plant;
  in.controller_type = ControllerKind::FSF;
  in.ranges = default_ranges(ControllerKind::FSF, plant);
  in.iteration = 4;
  in.max_iterations = 20;
  const auto a = heuristic_actor(in, 1234);
  const auto b = heuristic_actor(in, 1234);
  const auto c = heuristic_actor(in, 1235);
  CHECK(a.gains == b.gains);
  CHECK(a.gains != c.gains);
}

TEST_CASE("critic strategy follows the explore window and stability") {
  PlantModel plant = PlantModel::from_name("dc_motor");

  auto in1 = actor_inputs(plant, 1, 30);
  CHECK(heuristic_critic(in1).strategy == Strategy::Explore);

  auto in25 = actor_inputs(plant, 25, 30);
  in25.best_attempts = {stable_record(12.5, 0.91)};
  in25.current_metrics = in25.best_attempts.front().metrics;
  CHECK(heuristic_critic(in25).strategy == Strategy::Exploit);

  auto in25u = actor_inputs(plant, 25, 30);
  auto unstable = stable_record(50.0, 2.0);
  unstable.metrics.stable = false;
  in25u.best_attempts = {unstable};
  in25u.current_metrics = unstable.metrics;
  CHECK(heuristic_critic(in25u).strategy == Strategy::Explore);
}

TEST_CASE("heuristic terminator applies the written decision criteria") {
  PlantModel plant = PlantModel::from_name("dc_motor");

  SUBCASE("below the minimum it always continues") {
    auto in = actor_inputs(plant, 1, 30);
    in.current_metrics = stable_record(50.0, 0.92).metrics;
    CHECK(heuristic_terminator(in).decision == TerminatorDecision::Continue);
  }

  SUBCASE("the reference late-iteration inputs point to redesign") {
    auto in = actor_inputs(plant, 27, 30);
    CriticFeedback fb;
    fb.strategy = Strategy::Exploit;
    in.latest_feedback = fb;
    auto m = stable_record(12.25, 0.910367).metrics;
    m.settling_time = 3.79;
    m.overshoot = 10.4325;
    in.current_metrics = m;
    ImprovementReport imp;
    imp.mse_change = -0.0112;
    imp.settling_time_change = -1.3369;
    imp.overshoot_change = 7.2263;
    imp.iterations_analyzed = 5;
    in.improvement = imp;
    ConvergenceReport conv;
    conv.parameter_changes = {{"Kp", 3.4231}};
    conv.max_change_percent = 3.4231;
    conv.converged = true;
    conv.iterations_analyzed = 5;
    in.convergence = conv;
    CHECK(heuristic_terminator(in).decision ==
          TerminatorDecision::TerminateRedesign);
  }

  SUBCASE("all targets met, low oscillation, converged: success") {
    auto in = actor_inputs(plant, 10, 30);
    CriticFeedback fb;
    fb.strategy = Strategy::Exploit;
    in.latest_feedback = fb;
    auto m = stable_record(12.5, 0.85).metrics;
    m.settling_time = 2.5;
    m.overshoot = 8.0;
    m.zero_crossings = 3;
    in.current_metrics = m;
    ConvergenceReport conv;
    conv.max_change_percent = 2.0;
    conv.converged = true;
    in.convergence = conv;
    ImprovementReport imp;
    imp.mse_change = 1.0;
    in.improvement = imp;
    CHECK(heuristic_terminator(in).decision ==
          TerminatorDecision::TerminateSuccess);
  }

  SUBCASE("explore strategy always continues") {
    auto in = actor_inputs(plant, 10, 30);
    CriticFeedback fb;
    fb.strategy = Strategy::Explore;
    in.latest_feedback = fb;
    in.current_metrics = stable_record(12.5, 0.92).metrics;
    CHECK(heuristic_terminator(in).decision == TerminatorDecision::Continue);
  }
}

TEST_CASE("heuristic juror reconsiders ranges around the best gains") {
  PlantModel plant = PlantModel::from_name("dc_motor");

  SUBCASE("low stability rate shrinks the box around the best") {
    PromptInputs in;
    in.plant = &plant;
    in.controller_type = ControllerKind::FSF;
    in.ranges = {{"K1", {0.01, 10.0}},
                 {"K2", {0.01, 100.0}},
                 {"K3", {0.01, 69.995}}};
    in.global_limits = in.ranges;
    IterationRecord best;
    best.iteration = 19;
    best.gains = {{"K1", 5.0}, {"K2", 50.0}, {"K3", 45.0}};
    best.metrics.stable = true;
    best.metrics.mse = 0.06;
    in.best_attempts = {best};
    in.stability_rate = 0.2;
    const auto v = heuristic_juror(in, in.global_limits);
    CHECK(v.decision == JurorDecision::ReconsiderRange);
    REQUIRE(v.new_range.has_value());
    for (const auto& [name, range] : *v.new_range) {
      const auto& old = in.ranges.at(name);
      CHECK(range[0] >= old[0] - 1e-12);
      CHECK(range[1] <= old[1] + 1e-12);
      CHECK(range[0] < range[1]);
      CHECK(best.gains.at(name) >= range[0]);
      CHECK(best.gains.at(name) <= range[1]);
      // half the old width
      CHECK(range[1] - range[0] <= 0.5 * (old[1] - old[0]) + 1e-9);
    }
  }

  SUBCASE("centered best with high stability explores further") {
    PromptInputs in;
    in.plant = &plant;
    in.controller_type = ControllerKind::P;
    in.ranges = {{"Kp", {10.0, 60.0}}};
    in.global_limits = in.ranges;
    IterationRecord best = stable_record(35.0, 0.91);
    in.best_attempts = {best};
    in.stability_rate = 0.9;
    const auto v = heuristic_juror(in, in.global_limits);
    CHECK(v.decision == JurorDecision::ExploreFurther);
    CHECK_FALSE(v.new_range.has_value());
  }
}

TEST_CASE("every heuristic output validates against its role schema") {
  PlantModel plant = PlantModel::from_name("ball_beam");
  PromptInputs in;
  in.plant = &plant;
  in.controller_type = ControllerKind::FSF;
  in.ranges = default_ranges(ControllerKind::FSF, plant);
  in.global_limits = in.ranges;
  in.iteration = 3;
  in.max_iterations = 20;
  in.targets = {0.2, 6.0, 5.0};
  in.current_metrics = stable_record(5.0, 0.07).metrics;
  in.current_gains = {{"K1", 5.0}, {"K2", 10.0}, {"K3", 50.0}, {"K4", 5.0}};
  in.best_attempts = {stable_record(5.0, 0.07)};
  in.best_attempts.front().gains = in.current_gains;
  CriticFeedback fb;
  fb.strategy = Strategy::Exploit;
  in.latest_feedback = fb;

  HeuristicBackend backend(42);
  for (auto role : {AgentRole::Selector, AgentRole::Scenarist, AgentRole::Actor,
                    AgentRole::Critic, AgentRole::Terminator, AgentRole::Juror}) {
    const auto prompt = render_prompt(role, in);
    const std::string raw = backend.respond(role, in, prompt);
    CHECK_NOTHROW(parse_agent_json(raw, role));
  }
}

TEST_CASE("replay backend returns recorded responses in order and exhausts") {
  ReplayBackend replay(data_path("dc_motor_reference_transcript.jsonl"));
  PlantModel plant = PlantModel::from_name("dc_motor");
  PromptInputs in = actor_inputs(plant, 1, 30);
  RenderedPrompt dummy;

  const auto first = parse_actor(replay.respond(AgentRole::Actor, in, dummy));
  CHECK(first.gains.at("Kp") == doctest::Approx(50.0));
  const auto second = parse_actor(replay.respond(AgentRole::Actor, in, dummy));
  CHECK(second.gains.at("Kp") == doctest::Approx(30.0));
  CHECK(replay.remaining(AgentRole::Actor) == 25);

  while (replay.remaining(AgentRole::Actor) > 0)
    replay.respond(AgentRole::Actor, in, dummy);
  CHECK_THROWS_AS(replay.respond(AgentRole::Actor, in, dummy), ReplayError);

  const auto sel = parse_selector(replay.respond(AgentRole::Selector, in, dummy));
  CHECK(sel.controller_type == ControllerKind::P);
}

TEST_CASE("missing API key is a configuration error before any network call") {
  ChatEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";  // would fail if ever contacted
  cfg.model = "test-model";
  cfg.api_key_env = "CTLOPT_TEST_SURELY_UNSET_KEY";
  unsetenv("CTLOPT_TEST_SURELY_UNSET_KEY");
  CHECK_THROWS_AS(chat_complete(cfg, "s", "u"), ConfigError);
}

TEST_CASE("chat client retries 429 with backoff and succeeds") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                const int n = ++hits;
                CHECK(req.get_header_value("Authorization") ==
                      "Bearer test-key");
                if (n <= 2) {
                  res.status = 429;
                  res.set_content("{\"error\": \"rate limited\"}",
                                  "application/json");
                } else {
                  res.set_content(
                      "{\"choices\": [{\"message\": {\"role\": \"assistant\", "
                      "\"content\": \"{\\\"Kp\\\": 42.0}\"}}]}",
                      "application/json");
                }
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread st([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("CTLOPT_TEST_KEY", "test-key", 1);
  ChatEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.model = "test-model";
  cfg.api_key_env = "CTLOPT_TEST_KEY";
  cfg.max_retries = 3;
  cfg.backoff_base_s = 0.02;

  const std::string content = chat_complete(cfg, "system text", "user text");
  CHECK(content == "{\"Kp\": 42.0}");
  CHECK(hits.load() == 3);

  server.stop();
  st.join();
}

TEST_CASE("chat client does not retry on other 4xx statuses") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                ++hits;
                res.status = 404;
                res.set_content("nope", "text/plain");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread st([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("CTLOPT_TEST_KEY", "test-key", 1);
  ChatEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "test-model";
  cfg.api_key_env = "CTLOPT_TEST_KEY";
  cfg.max_retries = 5;
  cfg.backoff_base_s = 0.01;

  CHECK_THROWS_AS(chat_complete(cfg, "s", "u"), TransportError);
  CHECK(hits.load() == 1);

  server.stop();
  st.join();
}

TEST_CASE("exhausted retries surface as a transport error") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                ++hits;
                res.status = 503;
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread st([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("CTLOPT_TEST_KEY", "k", 1);
  ChatEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "m";
  cfg.api_key_env = "CTLOPT_TEST_KEY";
  cfg.max_retries = 2;
  cfg.backoff_base_s = 0.01;

  CHECK_THROWS_AS(chat_complete(cfg, "s", "u"), TransportError);
  CHECK(hits.load() == 3);  // initial attempt + 2 retries

  server.stop();
  st.join();
}
