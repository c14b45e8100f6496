// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "howto/agent.hpp"
#include "howto/util.hpp"

using namespace howto;
using namespace howto::agent;
using simenv::ActionKind;
using simenv::AppScript;

namespace {

AppScript settings_app() {
  return simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/settings.json");
}

AppScript cycle_app() {
  return simenv::load_app_script(HOWTO_FIXTURES_DIR "/stress/cycle.json");
}

PredictorInput input_for(const AppScript& script,
                         const std::vector<std::string>& instructions,
                         const std::map<std::string, std::string>& aux = {}) {
  simenv::UiState state = simenv::initial_state(script);
  auto controls = simenv::distill_controls(state.root);
  simenv::annotate_toggle_support(controls, state.screen_id, script);
  return build_predictor_input(state, controls, {}, {}, instructions, aux);
}

}  // namespace

TEST_CASE("build_predictor_input: histories start empty and stay paired") {
  AppScript app = settings_app();
  auto input = input_for(app, {"In Settings, tap Sound."});
  CHECK(input.prior_states.empty());
  CHECK(input.prior_actions.empty());
  CHECK(input.candidates.clickable.size() == 4);

  std::vector<StateSnapshot> states(2);
  std::vector<ActionTrace> actions(2);
  simenv::UiState state = simenv::initial_state(app);
  auto controls = simenv::distill_controls(state.root);
  auto input3 = build_predictor_input(state, controls, states, actions,
                                      {"step"}, {{"username", "u"}});
  CHECK(input3.prior_states.size() == 2);
  CHECK(input3.prior_actions.size() == 2);
  CHECK(input3.aux_context.at("username") == "u");

  std::vector<ActionTrace> mismatched(1);
  CHECK_THROWS_AS(
      build_predictor_input(state, controls, states, mismatched, {}, {}),
      Error);
}

TEST_CASE("lexical predictor clicks the best-overlap control") {
  AppScript app = settings_app();
  auto input = input_for(app, {"In Settings, tap Sound.", "then more"});
  LexicalPredictor predictor;
  auto pred = predictor.predict(input);
  REQUIRE(pred.has_value());
  CHECK(pred->action.kind == ActionKind::click);
  CHECK(pred->action.control_label == "Sound");
  CHECK(pred->attributed_step == 0);
  CHECK(pred->confidence >= 0.34);
}

TEST_CASE("lexical predictor types aux values for text-entry steps") {
  const char* script = R"({
    "app_name": "x", "initial_screen": "s",
    "screens": [{"screen_id": "s", "root": {"id": "r", "children": [
      {"id": "f", "text": "Username", "actionable": true, "editable": true},
      {"id": "b", "text": "Submit", "actionable": true}
    ]}}]
  })";
  AppScript app = simenv::app_script_from_json_text(script, "inline");
  auto input = input_for(app, {"enter your username"}, {{"username", "arthur"}});
  LexicalPredictor predictor;
  auto pred = predictor.predict(input);
  REQUIRE(pred.has_value());
  CHECK(pred->action.kind == ActionKind::input);
  CHECK(pred->action.text_value == "arthur");
  CHECK(pred->action.control_label == "Username");
}

TEST_CASE("lexical predictor gives up on a dead non-scrollable screen") {
  AppScript app = settings_app();
  auto input = input_for(app, {"press the quantum flux button"});
  LexicalPredictor predictor;
  CHECK(!predictor.predict(input).has_value());
}

TEST_CASE("lexical predictor swipes down once when the screen scrolls") {
  AppScript maps = simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/maps.json");
  simenv::UiState state;
  state.screen_id = "saved";
  state.root = maps.find_screen("saved")->root;
  auto controls = simenv::distill_controls(state.root);
  auto input = build_predictor_input(state, controls, {}, {},
                                     {"tap the flagged list"}, {});
  LexicalPredictor predictor;
  auto pred = predictor.predict(input);
  REQUIRE(pred.has_value());
  CHECK(pred->action.kind == ActionKind::swipe);

  // after an unproductive swipe down the predictor stops
  input.prior_states.push_back(input.ui_context);
  input.prior_actions.push_back({"swipe down", true});
  CHECK(!predictor.predict(input).has_value());
}

TEST_CASE("predict_action enforces the candidate-set contract") {
  AppScript app = settings_app();
  auto input = input_for(app, {"In Settings, tap Sound."});
  struct Rogue : PredictorInterface {
    std::string id() const override { return "rogue"; }
    std::optional<PredictedAction> predict(const PredictorInput&) override {
      PredictedAction p;
      p.action.kind = ActionKind::click;
      p.action.control_index = 99;  // not a candidate
      p.attributed_step = 0;
      return p;
    }
  } rogue;
  std::string note;
  CHECK(!predict_action(input, rogue, &note).has_value());
  CHECK(note.find("candidate") != std::string::npos);

  struct BadAttr : PredictorInterface {
    std::string id() const override { return "badattr"; }
    std::optional<PredictedAction> predict(const PredictorInput&) override {
      PredictedAction p;
      p.action.kind = ActionKind::done;
      p.attributed_step = 57;
      return p;
    }
  } badattr;
  CHECK(!predict_action(input, badattr, &note).has_value());
}

TEST_CASE("lexical_cursor advances only on applied overlapping actions") {
  std::vector<std::string> steps = {"In Settings, tap Sound.",
                                    "In Settings, tap Ringtone."};
  std::vector<ActionTrace> history;
  CHECK(lexical_cursor(steps, history) == 0);
  history.push_back({"click Sound", false});  // rejected: no advance
  CHECK(lexical_cursor(steps, history) == 0);
  history.back().applied = true;
  CHECK(lexical_cursor(steps, history) == 1);
  history.push_back({"swipe down", true});  // no overlap: no advance
  CHECK(lexical_cursor(steps, history) == 1);
  history.push_back({"click Ringtone", true});
  CHECK(lexical_cursor(steps, history) == 2);
}

TEST_CASE("run_execution completes a fully scripted 3-step task") {
  AppScript app = settings_app();
  std::vector<std::string> steps = {"In Settings, tap Sound.",
                                    "In Settings, tap Ringtone.",
                                    "In Settings, tap Chime."};
  LexicalPredictor predictor;
  ExecutionContext ctx{"page-1", "query-1", {}};
  Trajectory traj = run_execution(steps, app, predictor, {}, ctx);
  CHECK(traj.termination == Termination::completed);
  CHECK(traj.step_count() == 3);  // pinned: one applied click per step
  CHECK(traj.applied_count() == 3);
  for (const auto& s : traj.steps)
    CHECK(s.status == simenv::ApplyStatus::applied);
  AttributionJudge judge;
  CHECK(judge.score(traj, steps) == doctest::Approx(1.0));
}

TEST_CASE("run_execution gets stuck on instructions matching nothing") {
  AppScript app = settings_app();
  std::vector<std::string> steps = {"tap the zorblax crystal"};
  LexicalPredictor predictor;
  Trajectory traj = run_execution(steps, app, predictor, {},
                                  {"p", "q", {}});
  CHECK(traj.termination == Termination::stuck);
  CHECK(traj.step_count() == 0);
}

TEST_CASE("run_execution hits the 28-step limit on the cycle fixture") {
  AppScript app = cycle_app();
  std::vector<std::string> steps;
  for (int i = 0; i < 30; ++i)
    steps.push_back(i % 2 == 0 ? "tap Next" : "tap Rewind");
  LexicalPredictor predictor;
  ExecutionLimits limits;
  CHECK(limits.max_steps == 28);
  Trajectory traj = run_execution(steps, app, predictor, limits, {"p", "q", {}});
  CHECK(traj.termination == Termination::max_steps);
  CHECK(traj.step_count() == 28);
}

TEST_CASE("run_execution replay is byte-identical") {
  AppScript app = settings_app();
  std::vector<std::string> steps = {"In Settings, tap Display.",
                                    "In Settings, tap Fonts."};
  LexicalPredictor predictor;
  Trajectory a = run_execution(steps, app, predictor, {}, {"p", "q", {}});
  Trajectory b = run_execution(steps, app, predictor, {}, {"p", "q", {}});
  CHECK(trajectory_to_json(a) == trajectory_to_json(b));
}

TEST_CASE("run_execution records pre-action snapshots and candidates hold") {
  AppScript app = settings_app();
  std::vector<std::string> steps = {"In Settings, tap Network.",
                                    "In Settings, tap Wifi."};
  LexicalPredictor predictor;
  Trajectory traj = run_execution(steps, app, predictor, {}, {"p", "q", {}});
  REQUIRE(traj.step_count() == 2);
  CHECK(traj.steps[0].state.screen_id == "home");
  CHECK(traj.steps[1].state.screen_id == "network");
  // recorded action was always a member of its step's candidate set:
  // clicks carry an index within the distilled controls of the snapshot
  for (const auto& s : traj.steps) {
    REQUIRE(s.action.control_index.has_value());
    CHECK(*s.action.control_index <
          static_cast<int>(s.state.distilled_labels.size()));
  }
}

TEST_CASE("run_execution respects custom max_steps and rejects bad limits") {
  AppScript app = cycle_app();
  std::vector<std::string> steps;
  for (int i = 0; i < 30; ++i)
    steps.push_back(i % 2 == 0 ? "tap Next" : "tap Rewind");
  LexicalPredictor predictor;
  ExecutionLimits limits;
  limits.max_steps = 5;
  Trajectory traj = run_execution(steps, app, predictor, limits, {"p", "q", {}});
  CHECK(traj.step_count() == 5);
  CHECK(traj.termination == Termination::max_steps);

  limits.max_steps = 0;
  CHECK_THROWS_AS(run_execution(steps, app, predictor, limits, {"p", "q", {}}),
                  Error);
  CHECK_THROWS_AS(run_execution({}, app, predictor, {}, {"p", "q", {}}), Error);
}

TEST_CASE("two consecutive rejections mean stuck") {
  // One control matches the step but has no transition: applying it is
  // rejected every time.
  const char* script = R"({
    "app_name": "trap", "initial_screen": "s",
    "screens": [{"screen_id": "s", "root": {"id": "r", "children": [
      {"id": "b", "text": "Portal", "actionable": true}
    ]}}]
  })";
  AppScript app = simenv::app_script_from_json_text(script, "inline");
  LexicalPredictor predictor;
  Trajectory traj = run_execution({"tap the portal"}, app, predictor, {},
                                  {"p", "q", {}});
  CHECK(traj.termination == Termination::stuck);
  CHECK(traj.step_count() == 2);
  CHECK(traj.applied_count() == 0);
}

TEST_CASE("judge_completion ratio and rounding") {
  std::vector<std::string> steps = {"a1 alpha", "a2 beta", "a3 gamma",
                                    "a4 delta"};
  Trajectory traj;
  auto add_step = [&](int attributed, simenv::ApplyStatus status) {
    TrajectoryStep s;
    s.action.kind = ActionKind::click;
    s.action.control_index = 0;
    s.action.control_label = "x";
    s.attributed_step = attributed;
    s.status = status;
    traj.steps.push_back(s);
  };
  AttributionJudge judge;
  CHECK(judge.score(traj, steps) == 0.0);  // no actions at all

  add_step(0, simenv::ApplyStatus::applied);
  add_step(1, simenv::ApplyStatus::applied_via_fallback);
  CHECK(judge.score(traj, steps) == doctest::Approx(0.5));

  add_step(2, simenv::ApplyStatus::rejected);  // rejected: no credit
  CHECK(judge.score(traj, steps) == doctest::Approx(0.5));

  add_step(2, simenv::ApplyStatus::applied);
  add_step(3, simenv::ApplyStatus::applied);
  add_step(3, simenv::ApplyStatus::applied);  // duplicates count once
  CHECK(judge.score(traj, steps) == doctest::Approx(1.0));

  // rounding to 2 decimals: 1 of 3 -> 0.33
  Trajectory t2;
  t2.steps.push_back(traj.steps[0]);
  CHECK(judge.score(t2, {"a", "b", "c"}) == doctest::Approx(0.33));
}

TEST_CASE("trajectory json round trip") {
  AppScript app = settings_app();
  std::vector<std::string> steps = {"In Settings, tap Battery.",
                                    "In Settings, tap Saver."};
  LexicalPredictor predictor;
  Trajectory traj = run_execution(steps, app, predictor, {},
                                  {"page-7", "query-3", {}});
  std::string json_text = trajectory_to_json(traj);
  Trajectory loaded = trajectory_from_json(json_text);
  CHECK(trajectory_to_json(loaded) == json_text);
  CHECK(loaded.page_id == "page-7");
  CHECK(loaded.termination == traj.termination);
  REQUIRE(loaded.step_count() == traj.step_count());
  CHECK(loaded.steps[0].state.visible_texts == traj.steps[0].state.visible_texts);
}

TEST_CASE("step_count never exceeds the limit on random instructions") {
  AppScript app = settings_app();
  LexicalPredictor predictor;
  const char* words[] = {"sound", "display", "ringtone", "wifi", "battery",
                         "tap", "settings", "zorblax"};
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> steps;
    int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      std::string s;
      for (int w = 0; w < 3; ++w) {
        s += words[rng.below(8)];
        s += " ";
      }
      steps.push_back(s);
    }
    ExecutionLimits limits;
    limits.max_steps = 1 + static_cast<int>(rng.below(28));
    Trajectory traj = run_execution(steps, app, predictor, limits,
                                    {"p", "q", {}});
    CHECK(traj.step_count() <= static_cast<size_t>(limits.max_steps));
  }
}
