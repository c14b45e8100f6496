// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <functional>
#include <set>

#include "howto/simenv.hpp"
#include "howto/util.hpp"

using namespace howto;
using namespace howto::simenv;

namespace {

const char* kThreeScreenScript = R"({
  "app_name": "settings",
  "domain": "System",
  "initial_screen": "home",
  "screens": [
    {"screen_id": "home", "root": {"id": "home-root", "bounds": [0,0,1080,1920], "children": [
      {"id": "home-title", "text": "Device options"},
      {"id": "home-sound", "text": "Sound", "actionable": true},
      {"id": "home-display", "text": "Display", "actionable": true}
    ]}},
    {"screen_id": "sound", "root": {"id": "sound-root", "bounds": [0,0,1080,1920], "children": [
      {"id": "sound-title", "text": "Sound options"},
      {"id": "sound-ringtone", "text": "Ringtone", "actionable": true}
    ]}},
    {"screen_id": "ringtone", "root": {"id": "ring-root", "bounds": [0,0,1080,1920], "children": [
      {"id": "ring-label", "text": "Ringtone picked"}
    ]}}
  ],
  "transitions": [
    {"from": "home", "control": "sound", "action": "click", "to": "sound"},
    {"from": "sound", "control": "ringtone", "action": "click", "to": "ringtone"}
  ]
})";

AppScript three_screens() {
  return app_script_from_json_text(kThreeScreenScript, "inline");
}

Region make_region(std::string id, std::string text, bool actionable,
                   std::vector<Region> children = {}) {
  Region r;
  r.region_id = std::move(id);
  r.text = std::move(text);
  r.actionable = actionable;
  r.children = std::move(children);
  return r;
}

/// Independent tree-walk oracle for distillation: enumerate visible
/// actionable regions in preorder and pull labels by an explicit
/// stop-at-actionable recursion.
void oracle_walk(const Region& r, std::vector<std::string>& labels) {
  if (!r.visible) return;
  if (r.actionable) {
    std::string label = !r.text.empty() ? r.text : r.content_desc;
    if (label.empty()) {
      // gather from non-actionable visible descendants
      std::vector<const Region*> stack{&r};
      std::string acc;
      std::function<void(const Region&)> rec = [&](const Region& n) {
        for (const auto& c : n.children) {
          if (!c.visible || c.actionable) continue;
          std::string t = !c.text.empty() ? c.text : c.content_desc;
          if (!t.empty()) acc += (acc.empty() ? "" : " ") + t;
          rec(c);
        }
      };
      rec(r);
      label = acc;
    }
    if (!label.empty()) labels.push_back(label);
  }
  for (const auto& c : r.children) oracle_walk(c, labels);
}

}  // namespace

TEST_CASE("load_app_script: three-screen script") {
  AppScript s = three_screens();
  CHECK(s.screens.size() == 3);
  CHECK(s.initial_screen == "home");
  CHECK(s.find_screen("ringtone") != nullptr);
  CHECK(s.find_screen("missing") == nullptr);
}

TEST_CASE("load_app_script: transition to undefined screen is named") {
  std::string bad = kThreeScreenScript;
  auto pos = bad.find("\"to\": \"sound\"");
  bad.replace(pos, 13, "\"to\": \"Ghost\"");
  CHECK_THROWS_WITH_AS(app_script_from_json_text(bad, "inline"),
                       doctest::Contains("Ghost"), Error);
}

TEST_CASE("load_app_script: duplicate screen_id rejected") {
  std::string bad = kThreeScreenScript;
  auto pos = bad.find("\"screen_id\": \"sound\"");
  bad.replace(pos, 20, "\"screen_id\": \"home\"");
  CHECK_THROWS_WITH_AS(app_script_from_json_text(bad, "inline"),
                       doctest::Contains("home"), Error);
}

TEST_CASE("load_app_script: child bounds must stay inside the parent") {
  const char* bad = R"({
    "app_name": "x", "initial_screen": "s",
    "screens": [{"screen_id": "s", "root": {"id": "r", "bounds": [0,0,100,100],
      "children": [{"id": "c", "bounds": [50,50,200,80]}]}}]
  })";
  CHECK_THROWS_WITH_AS(app_script_from_json_text(bad, "inline"),
                       doctest::Contains("bounds"), Error);
}

TEST_CASE("load_app_script: fixture pack loads and spans domains") {
  std::filesystem::path dir = HOWTO_FIXTURES_DIR "/apps";
  std::set<std::string> domains;
  size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    AppScript s = load_app_script(entry.path());
    domains.insert(s.domain);
    ++count;
    // transition closure: everything reachable is defined (load enforces),
    // and the initial screen exists
    CHECK(s.find_screen(s.initial_screen) != nullptr);
  }
  CHECK(count >= 4);
  CHECK(domains.size() >= 3);
}

TEST_CASE("distill_controls consolidates nearest non-actionable texts") {
  // actionable row without text, label and value as children
  Region row = make_region("row", "", true,
                           {make_region("l", "Ringtone", false),
                            make_region("v", "Default", false)});
  Region root = make_region("root", "", false, {row});
  auto controls = distill_controls(root);
  REQUIRE(controls.size() == 1);
  CHECK(controls[0].label == "Ringtone Default");
  CHECK(controls[0].source_region_id == "row");
}

TEST_CASE("distill_controls filters invisible regions with their subtrees") {
  Region hidden = make_region("h", "Ghost button", true);
  hidden.visible = false;
  Region visible_under_hidden = make_region("vh", "Nested", true);
  hidden.children.push_back(visible_under_hidden);
  Region root = make_region("root", "", false,
                            {hidden, make_region("ok", "Fine", true)});
  auto controls = distill_controls(root);
  REQUIRE(controls.size() == 1);
  CHECK(controls[0].label == "Fine");
}

TEST_CASE("distill_controls: actionable child is its own control") {
  Region child = make_region("child", "Inner Button", true);
  Region parent = make_region("parent", "", true,
                              {make_region("lbl", "Outer label", false), child});
  Region root = make_region("root", "", false, {parent});
  auto controls = distill_controls(root);
  REQUIRE(controls.size() == 2);
  CHECK(controls[0].label == "Outer label");  // child text excluded
  CHECK(controls[1].label == "Inner Button");
  CHECK(controls[0].control_index == 0);
  CHECK(controls[1].control_index == 1);
}

TEST_CASE("distill_controls agrees with the tree-walk oracle") {
  Rng rng(99);
  const char* words[] = {"sound", "display", "alpha", "beta", "gamma", ""};
  for (int trial = 0; trial < 100; ++trial) {
    // random tree of depth <= 3
    std::function<Region(int, int)> build = [&](int depth, int idx) {
      Region r = make_region("r" + std::to_string(depth) + "-" +
                                 std::to_string(idx),
                             words[rng.below(6)], rng.below(3) == 0);
      r.visible = rng.below(5) != 0;
      if (depth < 3) {
        int kids = static_cast<int>(rng.below(3));
        for (int k = 0; k < kids; ++k)
          r.children.push_back(build(depth + 1, k));
      }
      return r;
    };
    Region root = build(0, 0);
    root.visible = true;
    auto controls = distill_controls(root);
    std::vector<std::string> expected;
    oracle_walk(root, expected);
    REQUIRE(controls.size() == expected.size());
    for (size_t i = 0; i < controls.size(); ++i)
      CHECK(controls[i].label == expected[i]);
    // no control from invisible/non-actionable regions, label tokens from
    // the source subtree
    for (const auto& c : controls) CHECK(!c.label.empty());
  }
}

TEST_CASE("candidate_actions enumerates by the fixed rules") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  auto controls = distill_controls(state.root);
  auto set = candidate_actions(controls, state);
  CHECK(set.clickable.size() == 2);
  CHECK(set.editable.empty());
  CHECK(!set.can_swipe);
  CHECK(set.size() == 4);  // 2 clicks + back + done

  ActionRequest back;
  back.kind = ActionKind::back;
  CHECK(set.contains(back));
  ActionRequest done;
  done.kind = ActionKind::done;
  CHECK(set.contains(done));
  ActionRequest swipe;
  swipe.kind = ActionKind::swipe;
  swipe.direction = SwipeDirection::down;
  CHECK(!set.contains(swipe));
}

TEST_CASE("candidate_actions: editable and scrollable flags") {
  Region field = make_region("f", "Username", true);
  field.editable = true;
  Region list = make_region("l", "Results", true);
  list.scrollable = true;
  Region root = make_region("root", "", false, {field, list});
  UiState state;
  state.screen_id = "s";
  state.root = root;
  auto controls = distill_controls(root);
  auto set = candidate_actions(controls, state);
  CHECK(set.editable.size() == 1);
  CHECK(set.can_swipe);
  ActionRequest input;
  input.kind = ActionKind::input;
  input.control_index = set.editable[0];
  input.text_value = "u";
  CHECK(set.contains(input));
}

TEST_CASE("apply_action: scripted click advances the screen") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  ActionRequest req;
  req.kind = ActionKind::click;
  req.control_index = 0;  // "Sound"
  req.control_label = "Sound";
  auto result = apply_action(state, req, s);
  CHECK(result.status == ApplyStatus::applied);
  CHECK(result.new_state.screen_id == "sound");
  CHECK(result.new_state.back_stack == std::vector<std::string>{"home"});
}

TEST_CASE("apply_action: stale index falls back to the unique label match") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  state.screen_id = "sound";
  state.root = s.find_screen("sound")->root;
  ActionRequest req;
  req.kind = ActionKind::click;
  req.control_index = 7;  // stale
  req.control_label = "Ringtone";
  auto result = apply_action(state, req, s);
  CHECK(result.status == ApplyStatus::applied_via_fallback);
  CHECK(result.new_state.screen_id == "ringtone");
}

TEST_CASE("apply_action: unmatched click is rejected without side effects") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  uint64_t before = state_fingerprint(state);
  ActionRequest req;
  req.kind = ActionKind::click;
  req.control_index = 42;
  req.control_label = "Nonexistent Widget";
  auto result = apply_action(state, req, s);
  CHECK(result.status == ApplyStatus::rejected);
  CHECK(state_fingerprint(result.new_state) == before);
}

TEST_CASE("apply_action: ambiguous fallback label is rejected") {
  const char* script = R"({
    "app_name": "x", "initial_screen": "s",
    "screens": [{"screen_id": "s", "root": {"id": "r", "children": [
      {"id": "a", "text": "Copy Link", "actionable": true},
      {"id": "b", "text": "Copy Text", "actionable": true}
    ]}}],
    "transitions": [{"from": "s", "control": "copy", "action": "click", "to": "s"}]
  })";
  AppScript s = app_script_from_json_text(script, "inline");
  UiState state = initial_state(s);
  ActionRequest req;
  req.kind = ActionKind::click;
  req.control_index = 9;
  req.control_label = "Copy";
  auto result = apply_action(state, req, s);
  CHECK(result.status == ApplyStatus::rejected);
}

TEST_CASE("apply_action: malformed request throws, distinct from rejection") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  ActionRequest req;
  req.kind = ActionKind::input;  // missing control_index and text
  CHECK_THROWS_AS(apply_action(state, req, s), Error);
  ActionRequest swipe;
  swipe.kind = ActionKind::swipe;  // missing direction
  CHECK_THROWS_AS(apply_action(state, swipe, s), Error);
}

TEST_CASE("apply_action: input writes the field store") {
  const char* script = R"({
    "app_name": "x", "initial_screen": "s",
    "screens": [{"screen_id": "s", "root": {"id": "r", "children": [
      {"id": "f", "text": "Username", "actionable": true, "editable": true}
    ]}}]
  })";
  AppScript s = app_script_from_json_text(script, "inline");
  UiState state = initial_state(s);
  ActionRequest req;
  req.kind = ActionKind::input;
  req.control_index = 0;
  req.control_label = "Username";
  req.text_value = "arthur";
  auto result = apply_action(state, req, s);
  CHECK(result.status == ApplyStatus::applied);
  CHECK(result.new_state.fields.at("username") == "arthur");

  // non-editable target is a rejection, not an error
  ActionRequest bad = req;
  bad.control_index = 0;
  AppScript s2 = three_screens();
  UiState st2 = initial_state(s2);
  bad.control_label = "Sound";
  auto r2 = apply_action(st2, bad, s2);
  CHECK(r2.status == ApplyStatus::rejected);
}

TEST_CASE("apply_action: click falls back to a toggle-only control") {
  const char* script = R"({
    "app_name": "x", "initial_screen": "s",
    "screens": [
      {"screen_id": "s", "root": {"id": "r", "children": [
        {"id": "t", "text": "Mute Switch", "actionable": true}]}},
      {"screen_id": "muted", "root": {"id": "r2", "children": [
        {"id": "lbl", "text": "Muted"}]}}
    ],
    "transitions": [
      {"from": "s", "control": "mute", "action": "toggle", "to": "muted"}
    ]
  })";
  AppScript s = app_script_from_json_text(script, "inline");
  UiState state = initial_state(s);
  auto controls = distill_controls(state.root);
  annotate_toggle_support(controls, state.screen_id, s);
  REQUIRE(controls.size() == 1);
  CHECK(controls[0].can_toggle);
  auto sup = controls[0].actions_supported();
  CHECK(std::find(sup.begin(), sup.end(), "toggle") != sup.end());

  ActionRequest req;
  req.kind = ActionKind::click;
  req.control_index = 0;
  req.control_label = "Mute Switch";
  auto result = apply_action(state, req, s);
  CHECK(result.status == ApplyStatus::applied_via_fallback);
  CHECK(result.new_state.screen_id == "muted");
}

TEST_CASE("apply_action: back pops the stack, empty stack rejects") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  ActionRequest back;
  back.kind = ActionKind::back;
  CHECK(apply_action(state, back, s).status == ApplyStatus::rejected);

  ActionRequest click;
  click.kind = ActionKind::click;
  click.control_index = 0;
  click.control_label = "Sound";
  state = apply_action(state, click, s).new_state;
  auto result = apply_action(state, back, s);
  CHECK(result.status == ApplyStatus::applied);
  CHECK(result.new_state.screen_id == "home");
  CHECK(result.new_state.back_stack.empty());
}

TEST_CASE("apply_action: swipe needs a scrollable region and follows script") {
  AppScript maps = load_app_script(HOWTO_FIXTURES_DIR "/apps/maps.json");
  UiState state;
  state.screen_id = "saved";
  state.root = maps.find_screen("saved")->root;
  ActionRequest swipe;
  swipe.kind = ActionKind::swipe;
  swipe.direction = SwipeDirection::down;
  auto result = apply_action(state, swipe, maps);
  CHECK(result.status == ApplyStatus::applied);
  CHECK(result.new_state.screen_id == "saved-more");

  UiState home = initial_state(maps);
  auto rejected = apply_action(home, swipe, maps);
  CHECK(rejected.status == ApplyStatus::rejected);
}

TEST_CASE("apply_action is deterministic") {
  AppScript s = three_screens();
  UiState state = initial_state(s);
  ActionRequest req;
  req.kind = ActionKind::click;
  req.control_index = 0;
  req.control_label = "Sound";
  auto a = apply_action(state, req, s);
  auto b = apply_action(state, req, s);
  CHECK(a.status == b.status);
  CHECK(a.note == b.note);
  CHECK(state_fingerprint(a.new_state) == state_fingerprint(b.new_state));
}

TEST_CASE("back stack depth is bounded") {
  const char* script = R"({
    "app_name": "x", "initial_screen": "a",
    "screens": [
      {"screen_id": "a", "root": {"id": "ra", "children": [
        {"id": "na", "text": "Next", "actionable": true}]}},
      {"screen_id": "b", "root": {"id": "rb", "children": [
        {"id": "nb", "text": "Prev", "actionable": true}]}}
    ],
    "transitions": [
      {"from": "a", "control": "next", "action": "click", "to": "b"},
      {"from": "b", "control": "prev", "action": "click", "to": "a"}
    ]
  })";
  AppScript s = app_script_from_json_text(script, "inline");
  UiState state = initial_state(s);
  for (int i = 0; i < 100; ++i) {
    ActionRequest req;
    req.kind = ActionKind::click;
    req.control_index = 0;
    req.control_label = i % 2 == 0 ? "Next" : "Prev";
    state = apply_action(state, req, s).new_state;
  }
  CHECK(state.back_stack.size() <= kBackStackLimit);
}
