// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/simenv.hpp"

#include <algorithm>
#include <unordered_set>

#include "howto/html.hpp"
#include "howto/util.hpp"
#include "json.hpp"

namespace howto::simenv {

using nlohmann::json;

const Screen* AppScript::find_screen(const std::string& screen_id) const {
  for (const auto& s : screens)
    if (s.screen_id == screen_id) return &s;
  return nullptr;
}

std::vector<std::string> DistilledControl::actions_supported() const {
  std::vector<std::string> out;
  if (can_click) out.push_back("click");
  if (can_input) out.push_back("input");
  if (can_swipe) out.push_back("swipe");
  if (can_toggle) out.push_back("toggle");
  return out;
}

const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::click: return "click";
    case ActionKind::input: return "input";
    case ActionKind::swipe: return "swipe";
    case ActionKind::back: return "back";
    case ActionKind::done: return "done";
  }
  return "click";
}

ActionKind action_kind_from_string(const std::string& s) {
  if (s == "click") return ActionKind::click;
  if (s == "input") return ActionKind::input;
  if (s == "swipe") return ActionKind::swipe;
  if (s == "back") return ActionKind::back;
  if (s == "done") return ActionKind::done;
  throw Error("unknown action kind: " + s);
}

const char* to_string(ApplyStatus s) {
  switch (s) {
    case ApplyStatus::applied: return "applied";
    case ApplyStatus::applied_via_fallback: return "applied_via_fallback";
    case ApplyStatus::rejected: return "rejected";
  }
  return "rejected";
}

std::string action_description(const ActionRequest& req) {
  std::string out = to_string(req.kind);
  if (req.kind == ActionKind::swipe && req.direction) {
    out += *req.direction == SwipeDirection::up ? " up" : " down";
  }
  if (!req.control_label.empty()) {
    out += " ";
    out += req.control_label;
  }
  return out;
}

bool ActionSet::contains(const ActionRequest& req) const {
  switch (req.kind) {
    case ActionKind::click:
      return req.control_index &&
             std::find(clickable.begin(), clickable.end(),
                       *req.control_index) != clickable.end();
    case ActionKind::input:
      return req.control_index && req.text_value &&
             std::find(editable.begin(), editable.end(), *req.control_index) !=
                 editable.end();
    case ActionKind::swipe:
      return can_swipe && req.direction.has_value();
    case ActionKind::back:
    case ActionKind::done:
      return true;
  }
  return false;
}

size_t ActionSet::size() const {
  return clickable.size() + editable.size() + (can_swipe ? 2 : 0) + 2;
}

// ---------------------------------------------------------------------------
// Script loading
// ---------------------------------------------------------------------------

namespace {

TransitionAction transition_action_from_string(const std::string& s,
                                               const std::string& origin) {
  if (s == "click") return TransitionAction::click;
  if (s == "input") return TransitionAction::input;
  if (s == "toggle") return TransitionAction::toggle;
  if (s == "swipe_up") return TransitionAction::swipe_up;
  if (s == "swipe_down") return TransitionAction::swipe_down;
  throw Error(origin + ": unknown transition action \"" + s + "\"");
}

bool needs_pattern(TransitionAction a) {
  return a == TransitionAction::click || a == TransitionAction::input ||
         a == TransitionAction::toggle;
}

Region region_from_json(const json& j, const std::string& origin,
                        const Rect* parent_bounds) {
  if (!j.is_object()) throw Error(origin + ": region must be an object");
  Region r;
  r.region_id = j.value("id", "");
  if (r.region_id.empty())
    throw Error(origin + ": region missing \"id\"");
  r.text = j.value("text", "");
  r.content_desc = j.value("desc", "");
  r.visible = j.value("visible", true);
  r.actionable = j.value("actionable", false);
  r.scrollable = j.value("scrollable", false);
  r.editable = j.value("editable", false);
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_array() || b.size() != 4)
      throw Error(origin + ": region " + r.region_id +
                  " bounds must be [l,t,r,b]");
    r.bounds = Rect{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(),
                    b[3].get<int>()};
    if (parent_bounds && !parent_bounds->empty() && !r.bounds.empty() &&
        !parent_bounds->contains(r.bounds))
      throw Error(origin + ": region " + r.region_id +
                  " bounds exceed parent bounds");
  } else if (parent_bounds) {
    r.bounds = *parent_bounds;
  }
  if (j.contains("children")) {
    for (const auto& c : j["children"])
      r.children.push_back(region_from_json(c, origin, &r.bounds));
  }
  return r;
}

void check_region_ids(const Region& r, std::unordered_set<std::string>& seen,
                      const std::string& origin,
                      const std::string& screen_id) {
  if (!seen.insert(r.region_id).second)
    throw Error(origin + ": duplicate region id \"" + r.region_id +
                "\" on screen " + screen_id);
  for (const auto& c : r.children) check_region_ids(c, seen, origin, screen_id);
}

}  // namespace

AppScript app_script_from_json_text(const std::string& text,
                                    const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(origin + ": not valid JSON");
  AppScript script;
  if (!j.contains("app_name") || !j["app_name"].is_string())
    throw Error(origin + ": missing app_name");
  script.app_name = j["app_name"].get<std::string>();
  script.domain = j.value("domain", "Other");
  if (!j.contains("initial_screen") || !j["initial_screen"].is_string())
    throw Error(origin + ": missing initial_screen");
  script.initial_screen = j["initial_screen"].get<std::string>();

  if (!j.contains("screens") || !j["screens"].is_array() ||
      j["screens"].empty())
    throw Error(origin + ": missing or empty screens");
  std::unordered_set<std::string> screen_ids;
  for (const auto& js : j["screens"]) {
    Screen s;
    s.screen_id = js.value("screen_id", "");
    if (s.screen_id.empty())
      throw Error(origin + ": screen missing screen_id");
    if (!screen_ids.insert(s.screen_id).second)
      throw Error(origin + ": duplicate screen_id \"" + s.screen_id + "\"");
    if (!js.contains("root"))
      throw Error(origin + ": screen " + s.screen_id + " missing root");
    s.root = region_from_json(js["root"], origin, nullptr);
    std::unordered_set<std::string> region_ids;
    check_region_ids(s.root, region_ids, origin, s.screen_id);
    script.screens.push_back(std::move(s));
  }

  if (!screen_ids.count(script.initial_screen))
    throw Error(origin + ": initial_screen \"" + script.initial_screen +
                "\" is not a defined screen");

  if (j.contains("transitions")) {
    for (const auto& jt : j["transitions"]) {
      Transition t;
      t.from = jt.value("from", "");
      t.to = jt.value("to", "");
      t.control_pattern = jt.value("control", "");
      t.action = transition_action_from_string(jt.value("action", "click"),
                                               origin);
      if (jt.contains("effects")) {
        for (auto& [k, v] : jt["effects"].items())
          t.effects[k] = v.get<std::string>();
      }
      if (!screen_ids.count(t.from))
        throw Error(origin + ": transition references undefined screen \"" +
                    t.from + "\"");
      if (!screen_ids.count(t.to))
        throw Error(origin + ": transition references undefined screen \"" +
                    t.to + "\"");
      if (needs_pattern(t.action) && tokenize(t.control_pattern).empty())
        throw Error(origin +
                    ": transition control pattern has no content tokens");
      script.transitions.push_back(std::move(t));
    }
  }
  return script;
}

AppScript load_app_script(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error("app script not found: " + path.string());
  return app_script_from_json_text(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Control distillation
// ---------------------------------------------------------------------------

namespace {

std::string region_own_text(const Region& r) {
  if (!r.text.empty()) return r.text;
  return r.content_desc;
}

// Consolidation: texts of nearest non-actionable descendants, stopping at
// actionable ones.
void gather_label(const Region& r, std::string& out) {
  for (const auto& child : r.children) {
    if (!child.visible) continue;
    if (child.actionable) continue;
    std::string own = region_own_text(child);
    if (!own.empty()) {
      if (!out.empty()) out += " ";
      out += own;
    }
    gather_label(child, out);
  }
}

void distill_walk(const Region& r, std::vector<DistilledControl>& out) {
  if (!r.visible) return;
  if (r.actionable) {
    std::string label = region_own_text(r);
    if (label.empty()) gather_label(r, label);
    label = html::normalize_ws(label);
    // An actionable region with no text anywhere in reach cannot be
    // addressed; it yields no control.
    if (!label.empty()) {
      DistilledControl c;
      c.control_index = static_cast<int>(out.size());
      c.label = label;
      c.can_input = r.editable;
      c.can_swipe = r.scrollable;
      c.source_region_id = r.region_id;
      out.push_back(std::move(c));
    }
  }
  for (const auto& child : r.children) distill_walk(child, out);
}

bool any_scrollable(const Region& r) {
  if (!r.visible) return false;
  if (r.scrollable) return true;
  for (const auto& c : r.children)
    if (any_scrollable(c)) return true;
  return false;
}

bool pattern_matches(const std::string& pattern, const std::string& label) {
  auto want = token_set(pattern);
  if (want.empty()) return false;
  auto have = token_set(label);
  for (const auto& t : want)
    if (!have.count(t)) return false;
  return true;
}

const Transition* find_transition(const AppScript& script,
                                  const std::string& screen_id,
                                  TransitionAction action,
                                  const std::string& label) {
  for (const auto& t : script.transitions) {
    if (t.from != screen_id || t.action != action) continue;
    if (needs_pattern(action) && !pattern_matches(t.control_pattern, label))
      continue;
    return &t;
  }
  return nullptr;
}

std::string field_key(const DistilledControl& control) {
  auto toks = tokenize(control.label);
  if (toks.empty()) return control.source_region_id;
  std::string key;
  for (const auto& t : toks) {
    if (!key.empty()) key += "_";
    key += t;
  }
  return key;
}

void fire_transition(UiState& state, const Transition& t,
                     const AppScript& script) {
  const Screen* next = script.find_screen(t.to);
  if (next == nullptr)
    throw Error("transition targets unknown screen: " + t.to);
  if (state.back_stack.size() >= kBackStackLimit)
    state.back_stack.erase(state.back_stack.begin());
  state.back_stack.push_back(state.screen_id);
  state.screen_id = next->screen_id;
  state.root = next->root;
  for (const auto& [k, v] : t.effects) state.fields[k] = v;
}

struct Resolved {
  const DistilledControl* control = nullptr;
  bool via_fallback = false;
  std::string failure;
};

Resolved resolve_control(const std::vector<DistilledControl>& controls,
                         const ActionRequest& req) {
  Resolved r;
  if (!req.control_index) {
    r.failure = "request carries no control index";
    return r;
  }
  int idx = *req.control_index;
  if (idx >= 0 && idx < static_cast<int>(controls.size())) {
    const DistilledControl& c = controls[idx];
    if (req.control_label.empty() ||
        token_overlap(c.label, req.control_label) >= 0.5) {
      r.control = &c;
      return r;
    }
  }
  // Stale index: a unique sufficiently-overlapping label may substitute.
  if (!req.control_label.empty()) {
    const DistilledControl* match = nullptr;
    int count = 0;
    for (const auto& c : controls) {
      if (token_overlap(c.label, req.control_label) >= 0.5) {
        match = &c;
        ++count;
      }
    }
    if (count == 1) {
      r.control = match;
      r.via_fallback = true;
      return r;
    }
    r.failure = count == 0 ? "no control matches label \"" +
                                 req.control_label + "\""
                           : "label \"" + req.control_label +
                                 "\" is ambiguous across controls";
    return r;
  }
  r.failure = "control index out of range";
  return r;
}

ActionResult rejected(const UiState& state, const std::string& note) {
  return ActionResult{ApplyStatus::rejected, state, note};
}

}  // namespace

std::vector<DistilledControl> distill_controls(const Region& root) {
  std::vector<DistilledControl> out;
  distill_walk(root, out);
  return out;
}

void annotate_toggle_support(std::vector<DistilledControl>& controls,
                             const std::string& screen_id,
                             const AppScript& script) {
  for (auto& c : controls) {
    if (find_transition(script, screen_id, TransitionAction::toggle, c.label))
      c.can_toggle = true;
  }
}

ActionSet candidate_actions(const std::vector<DistilledControl>& controls,
                            const UiState& state) {
  ActionSet set;
  for (const auto& c : controls) {
    set.clickable.push_back(c.control_index);
    if (c.can_input) set.editable.push_back(c.control_index);
  }
  set.can_swipe = any_scrollable(state.root);
  return set;
}

UiState initial_state(const AppScript& script) {
  const Screen* s = script.find_screen(script.initial_screen);
  if (s == nullptr)
    throw Error("script has no initial screen: " + script.initial_screen);
  UiState state;
  state.screen_id = s->screen_id;
  state.root = s->root;
  return state;
}

ActionResult apply_action(const UiState& state, const ActionRequest& req,
                          const AppScript& script) {
  // Parameter/kind mismatches are caller bugs, not simulator outcomes.
  switch (req.kind) {
    case ActionKind::click:
      if (!req.control_index && req.control_label.empty())
        throw Error("malformed click: no control index or label");
      break;
    case ActionKind::input:
      if (!req.control_index || !req.text_value)
        throw Error("malformed input: control index and text required");
      break;
    case ActionKind::swipe:
      if (!req.direction) throw Error("malformed swipe: direction required");
      break;
    case ActionKind::back:
    case ActionKind::done:
      break;
  }

  auto controls = distill_controls(state.root);

  switch (req.kind) {
    case ActionKind::done:
      return ActionResult{ApplyStatus::applied, state, "terminal"};

    case ActionKind::back: {
      if (state.back_stack.empty())
        return rejected(state, "back stack empty");
      UiState next = state;
      std::string target = next.back_stack.back();
      next.back_stack.pop_back();
      const Screen* s = script.find_screen(target);
      if (s == nullptr) return rejected(state, "back target missing");
      next.screen_id = s->screen_id;
      next.root = s->root;
      return ActionResult{ApplyStatus::applied, std::move(next), "back"};
    }

    case ActionKind::swipe: {
      if (!any_scrollable(state.root))
        return rejected(state, "nothing scrollable on screen");
      TransitionAction ta = *req.direction == SwipeDirection::up
                                ? TransitionAction::swipe_up
                                : TransitionAction::swipe_down;
      UiState next = state;
      if (const Transition* t = find_transition(script, state.screen_id, ta, ""))
        fire_transition(next, *t, script);
      return ActionResult{ApplyStatus::applied, std::move(next), "swipe"};
    }

    case ActionKind::click: {
      Resolved r = resolve_control(controls, req);
      if (r.control == nullptr) return rejected(state, r.failure);
      if (const Transition* t = find_transition(
              script, state.screen_id, TransitionAction::click,
              r.control->label)) {
        UiState next = state;
        fire_transition(next, *t, script);
        return ActionResult{r.via_fallback ? ApplyStatus::applied_via_fallback
                                           : ApplyStatus::applied,
                            std::move(next),
                            "click " + r.control->label};
      }
      // Similar-gesture fallback: the control only reacts to a toggle.
      if (const Transition* t = find_transition(
              script, state.screen_id, TransitionAction::toggle,
              r.control->label)) {
        UiState next = state;
        fire_transition(next, *t, script);
        return ActionResult{ApplyStatus::applied_via_fallback, std::move(next),
                            "click as toggle " + r.control->label};
      }
      return rejected(state,
                      "no transition for control \"" + r.control->label + "\"");
    }

    case ActionKind::input: {
      Resolved r = resolve_control(controls, req);
      if (r.control == nullptr) return rejected(state, r.failure);
      if (!r.control->can_input)
        return rejected(state,
                        "control \"" + r.control->label + "\" not editable");
      UiState next = state;
      next.fields[field_key(*r.control)] = *req.text_value;
      if (const Transition* t = find_transition(
              script, state.screen_id, TransitionAction::input,
              r.control->label))
        fire_transition(next, *t, script);
      return ActionResult{r.via_fallback ? ApplyStatus::applied_via_fallback
                                         : ApplyStatus::applied,
                          std::move(next),
                          "input into " + r.control->label};
    }
  }
  return rejected(state, "unreachable");
}

uint64_t state_fingerprint(const UiState& state) {
  std::string repr = state.screen_id;
  repr += "|";
  for (const auto& [k, v] : state.fields) repr += k + "=" + v + ";";
  repr += "|";
  for (const auto& s : state.back_stack) repr += s + ",";
  return fnv1a64(repr);
}

namespace {

void collect_visible(const Region& r, std::vector<std::string>& out) {
  if (!r.visible) return;
  if (!r.text.empty()) out.push_back(r.text);
  if (!r.content_desc.empty()) out.push_back(r.content_desc);
  for (const auto& c : r.children) collect_visible(c, out);
}

}  // namespace

std::vector<std::string> visible_texts(const Region& root) {
  std::vector<std::string> out;
  collect_visible(root, out);
  return out;
}

}  // namespace howto::simenv
