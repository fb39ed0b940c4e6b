#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "ctlopt/prompts.hpp"
#include "ctlopt/protocol.hpp"

using namespace ctlopt;
namespace fs = std::filesystem;

namespace {

std::string data_path(const std::string& rel) {
  return std::string(CTLOPT_TEST_DATA_DIR) + "/" + rel;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE_MESSAGE(bool(f), path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("actor reply with surrounding prose and think tags parses") {
  const std::string raw =
      "<think>\nThe system needs a moderate gain to balance overshoot and "
      "settling.\n</think>\n\nHere is my proposal:\n```json\n{\n    \"Kp\": "
      "50.0,\n    \"reasoning\": \"Starting with a higher Kp value\"\n}\n```\n";
  const auto p = parse_actor(raw);
  CHECK(p.gains.at("Kp") == doctest::Approx(50.0));
  CHECK(p.reasoning == "Starting with a higher Kp value");
}

TEST_CASE("juror reply with prefix text parses with partial ranges") {
  const std::string raw =
      "Sure - considering the exploration data:\n"
      "{\"decision\":\"RECONSIDER_RANGE\",\"new_range\":{\"K1\":[4.0,7.5],"
      "\"K2\":[3.0,10.0],\"K3\":[30.0,60.0],\"K4\":[3.0,6.0]},"
      "\"reasoning\":\"shift\"}  trailing commentary";
  const auto v = parse_juror(raw);
  CHECK(v.decision == JurorDecision::ReconsiderRange);
  REQUIRE(v.new_range.has_value());
  CHECK(v.new_range->at("K1")[0] == doctest::Approx(4.0));
  CHECK(v.new_range->size() == 4);
}

TEST_CASE("empty object for the critic is a schema error") {
  CHECK_THROWS_AS(parse_critic("{}"), SchemaError);
}

TEST_CASE("no JSON at all is a parse error") {
  CHECK_THROWS_AS(parse_actor("I think Kp should be about 12"), ParseError);
  CHECK_THROWS_AS(parse_actor(""), ParseError);
}

TEST_CASE("unknown decision tokens are schema errors") {
  CHECK_THROWS_AS(parse_terminator("{\"decision\": \"MAYBE\"}"), SchemaError);
  CHECK_THROWS_AS(parse_juror("{\"decision\": \"PANIC\"}"), SchemaError);
  CHECK_THROWS_AS(parse_critic("{\"strategy\": \"EXPL\"}"), SchemaError);
}

TEST_CASE("reconsider without a range is a schema error") {
  CHECK_THROWS_AS(parse_juror("{\"decision\": \"RECONSIDER_RANGE\"}"),
                  SchemaError);
}

TEST_CASE("degenerate range bounds are rejected") {
  CHECK_THROWS_AS(
      parse_juror("{\"decision\":\"RECONSIDER_RANGE\",\"new_range\":{\"K1\":"
                  "[5.0,5.0]}}"),
      SchemaError);
}

TEST_CASE("round-trip over the logged message corpus") {
  const fs::path corpus_dir = data_path("corpus");
  int checked = 0;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (entry.path().extension() != ".json") continue;
    const auto doc = nlohmann::json::parse(slurp(entry.path().string()));
    const auto role = agent_role_from_string(doc["role"].get<std::string>());
    const std::string raw = doc["message"].dump();

    const AgentMessage first = parse_agent_json(raw, role);
    const std::string canonical = serialize(first);
    const AgentMessage second = parse_agent_json(canonical, role);
    CHECK_MESSAGE(first == second, entry.path().filename().string());
    CHECK(serialize(second) == canonical);
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("clamping pushes out-of-range gains to the boundary with warnings") {
  ActorProposal p;
  p.gains = {{"Kp", 75.0}, {"Ki", 5.0}};
  GainRanges ranges{{"Kp", {10.0, 60.0}}, {"Ki", {0.01, 15.0}}};
  const auto warnings = clamp_to_ranges(p, {"Kp", "Ki"}, ranges);
  CHECK(p.gains.at("Kp") == doctest::Approx(60.0));
  CHECK(p.gains.at("Ki") == doctest::Approx(5.0));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("Kp") != std::string::npos);

  ActorProposal missing;
  missing.gains = {{"Kp", 20.0}};
  CHECK_THROWS_AS(clamp_to_ranges(missing, {"Kp", "Ki"}, ranges), SchemaError);
}

namespace {

PromptInputs dc_motor_inputs(const PlantModel& plant) {
  PromptInputs in;
  in.plant = &plant;
  in.controller_type = ControllerKind::P;
  in.ranges = {{"Kp", {10.0, 60.0}}};
  in.iteration = 1;
  in.max_iterations = 30;
  in.min_iterations = 6;
  in.targets = {0.9, 3.0, 10.0};
  return in;
}

IterationRecord record_of(double kp, double mse, double ts, double os) {
  IterationRecord r;
  r.iteration = 1;
  r.gains = {{"Kp", kp}};
  r.metrics.mse = mse;
  r.metrics.settling_time = ts;
  r.metrics.overshoot = os;
  r.metrics.zero_crossings = 8;
  r.metrics.control_zero_crossings = 8;
  r.metrics.control_effort = 9060.5072;
  r.metrics.stable = true;
  return r;
}

}  // namespace

TEST_CASE("actor prompt shows the one-row history header") {
  PlantModel plant = PlantModel::from_name("dc_motor");
  PromptInputs in = dc_motor_inputs(plant);
  in.iteration = 2;
  in.trend_window = {record_of(50.0, 0.9203, 4.78, 18.2480)};
  in.best_attempts = in.trend_window;
  const auto prompt = render_prompt(AgentRole::Actor, in);
  CHECK(prompt.user_text.find("RECENT PERFORMANCE HISTORY (1 attempts)") !=
        std::string::npos);
  CHECK(prompt.user_text.find("- Kp: [10.0000, 60.0000]") != std::string::npos);
  CHECK(prompt.user_text.find("- Kp: 50.0000") != std::string::npos);
  CHECK(prompt.system_text.find("You are the ACTOR") != std::string::npos);
  CHECK(prompt.system_text.find("iteration 2 of 30") != std::string::npos);
}

TEST_CASE("critic prompt at iteration 1 recommends EXPLORE") {
  PlantModel plant = PlantModel::from_name("dc_motor");
  PromptInputs in = dc_motor_inputs(plant);
  in.current_gains = {{"Kp", 50.0}};
  TrajectoryMetrics m = record_of(50.0, 0.9203, 4.78, 18.2480).metrics;
  in.current_metrics = m;
  in.recommended_strategy = Strategy::Explore;
  const auto prompt = render_prompt(AgentRole::Critic, in);
  CHECK(prompt.user_text.find("the recommended strategy is to EXPLORE") !=
        std::string::npos);
  CHECK(prompt.user_text.find("No previous attempts available.") !=
        std::string::npos);
  CHECK(prompt.user_text.find("No best performance yet.") != std::string::npos);
  CHECK(prompt.user_text.find("- Mean Squared Error: 0.9203 (Target: 0.9000)") !=
        std::string::npos);
  CHECK(prompt.user_text.find("- Settling Time: 4.78s (Target: 3.00s)") !=
        std::string::npos);
}

TEST_CASE("terminator prompt carries analyses and decision criteria") {
  PlantModel plant = PlantModel::from_name("dc_motor");
  PromptInputs in = dc_motor_inputs(plant);
  in.iteration = 27;
  in.current_gains = {{"Kp", 12.25}};
  in.current_metrics = record_of(12.25, 0.910367, 3.79, 10.4325).metrics;
  CriticFeedback fb;
  fb.strategy = Strategy::Exploit;
  in.latest_feedback = fb;
  in.trend_window = {record_of(13.0, 0.9103, 3.74, 11.2451),
                     record_of(12.5, 0.9103, 3.77, 10.7139),
                     record_of(13.0, 0.9103, 3.74, 11.2451),
                     record_of(12.5, 0.9103, 3.77, 10.7139),
                     record_of(12.25, 0.9104, 3.79, 10.4325)};
  in.improvement = improvement_analysis(in.trend_window);
  in.convergence = convergence_analysis(in.trend_window);
  const auto prompt = render_prompt(AgentRole::Terminator, in);
  CHECK(prompt.user_text.find("IMPROVEMENT ANALYSIS:") != std::string::npos);
  CHECK(prompt.user_text.find("\"max_change_percent\": 3.4231") !=
        std::string::npos);
  CHECK(prompt.user_text.find("\"converged\": true") != std::string::npos);
  CHECK(prompt.user_text.find("If current_iteration < 6, always CONTINUE") !=
        std::string::npos);
  CHECK(prompt.user_text.find("- MSE: 0.910367 (NOT YET)") !=
        std::string::npos);
  CHECK(prompt.user_text.find("13.0000 → 12.5000") != std::string::npos);
}

TEST_CASE("prompt rendering is a pure function of its context") {
  PlantModel plant = PlantModel::from_name("ball_beam");
  PromptInputs in;
  in.plant = &plant;
  in.controller_type = ControllerKind::FSF;
  in.ranges = default_ranges(ControllerKind::FSF, plant);
  in.iteration = 3;
  in.max_iterations = 20;
  in.targets = {0.2, 6.0, 5.0};
  in.current_gains = {{"K1", 5.0}, {"K2", 10.0}, {"K3", 50.0}, {"K4", 5.0}};
  in.current_metrics = record_of(5.0, 0.0728, 4.34, 0.55).metrics;
  for (auto role : {AgentRole::Actor, AgentRole::Critic, AgentRole::Selector,
                    AgentRole::Scenarist, AgentRole::Juror}) {
    const auto a = render_prompt(role, in);
    const auto b = render_prompt(role, in);
    CHECK(a.system_text == b.system_text);
    CHECK(a.user_text == b.user_text);
  }
}

TEST_CASE("selector prompt lists the per-system controller menu") {
  PlantModel plant = PlantModel::from_name("dc_motor");
  PromptInputs in = dc_motor_inputs(plant);
  const auto prompt = render_prompt(AgentRole::Selector, in);
  CHECK(prompt.user_text.find("- P: Proportional controller (Kp: [10.0, 60.0])") !=
        std::string::npos);
  CHECK(prompt.user_text.find(
            "- FSF: Full-State Feedback controller (K1: [0.01, 10.0], "
            "K2: [0.01, 100.0], K3: [0.01, 200.0])") != std::string::npos);
  CHECK(prompt.user_text.find("\"controller_type\": \"P|PI|PD|PID|FSF\"") !=
        std::string::npos);
}

TEST_CASE("serialized heuristic-shaped messages parse back equal") {
  JurorVerdict v;
  v.decision = JurorDecision::ExploreFurther;
  v.reasoning = "keep looking";
  const auto round = parse_juror(serialize(AgentMessage{v}));
  CHECK(round == v);

  ScenaristScenario s;
  s.scenario = Scenario{"II", 1.0, 1.0, 0.01, 1.0, 0.0};
  s.reasoning = "noise level";
  const auto round2 = parse_scenarist(serialize(AgentMessage{s}));
  CHECK(round2 == s);
}
