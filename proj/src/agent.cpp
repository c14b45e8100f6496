// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/agent.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "howto/util.hpp"
#include "json.hpp"

namespace howto::agent {

using nlohmann::json;
using simenv::ActionKind;
using simenv::ActionRequest;
using simenv::ApplyStatus;
using simenv::SwipeDirection;

const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::stuck: return "stuck";
    case Termination::max_steps: return "max_steps";
  }
  return "stuck";
}

Termination termination_from_string(const std::string& s) {
  if (s == "completed") return Termination::completed;
  if (s == "stuck") return Termination::stuck;
  if (s == "max_steps") return Termination::max_steps;
  throw Error("unknown termination: " + s);
}

size_t Trajectory::applied_count() const {
  size_t n = 0;
  for (const auto& s : steps)
    if (s.status != ApplyStatus::rejected) ++n;
  return n;
}

size_t lexical_cursor(const std::vector<std::string>& instructions,
                      const std::vector<ActionTrace>& prior_actions,
                      double threshold) {
  size_t cursor = 0;
  for (const auto& act : prior_actions) {
    if (cursor >= instructions.size()) break;
    if (!act.applied) continue;
    if (token_overlap(act.description, instructions[cursor]) >= threshold)
      ++cursor;
  }
  return cursor;
}

namespace {

bool names_text_entry(const std::string& step) {
  static const std::unordered_set<std::string> verbs = {
      "enter", "type", "input", "fill", "write"};
  for (const auto& t : tokenize(step))
    if (verbs.count(t)) return true;
  return false;
}

bool last_action_was_swipe_down(const std::vector<ActionTrace>& prior) {
  if (prior.empty()) return false;
  auto toks = split_tokens(prior.back().description);
  return toks.size() >= 2 && toks[0] == "swipe" && toks[1] == "down";
}

}  // namespace

std::optional<PredictedAction> LexicalPredictor::predict(
    const PredictorInput& input) {
  const auto& instructions = input.instructions;
  size_t n = instructions.size();
  size_t cursor = lexical_cursor(instructions, input.prior_actions, threshold_);

  if (n == 0 || cursor >= n) {
    PredictedAction done;
    done.action.kind = ActionKind::done;
    done.attributed_step = n == 0 ? 0 : static_cast<int>(n) - 1;
    done.confidence = 1.0;
    return done;
  }

  const std::string& step = instructions[cursor];

  // Text-entry rule: an editable field plus an aux_context value keyed by a
  // step token.
  if (names_text_entry(step) && !input.candidates.editable.empty()) {
    std::optional<std::string> value;
    for (const auto& tok : tokenize(step)) {
      auto it = input.aux_context.find(tok);
      if (it != input.aux_context.end()) {
        value = it->second;
        break;
      }
    }
    if (value) {
      // Best-overlapping editable control; first one when nothing overlaps.
      int best_idx = input.candidates.editable.front();
      double best = -1.0;
      for (int idx : input.candidates.editable) {
        double score = token_overlap(input.controls[idx].label, step);
        if (score > best) {
          best = score;
          best_idx = idx;
        }
      }
      PredictedAction out;
      out.action.kind = ActionKind::input;
      out.action.control_index = best_idx;
      out.action.control_label = input.controls[best_idx].label;
      out.action.text_value = *value;
      out.attributed_step = static_cast<int>(cursor);
      out.confidence = 1.0;
      return out;
    }
  }

  // Click the best-overlapping control.
  int best_idx = -1;
  double best = 0.0;
  for (int idx : input.candidates.clickable) {
    double score = token_overlap(input.controls[idx].label, step);
    if (score > best) {
      best = score;
      best_idx = idx;
    }
  }
  if (best_idx >= 0 && best >= threshold_) {
    PredictedAction out;
    out.action.kind = ActionKind::click;
    out.action.control_index = best_idx;
    out.action.control_label = input.controls[best_idx].label;
    out.attributed_step = static_cast<int>(cursor);
    out.confidence = std::min(1.0, best);
    return out;
  }

  // Nothing matches: scroll once, but not twice in a row.
  if (input.candidates.can_swipe &&
      !last_action_was_swipe_down(input.prior_actions)) {
    PredictedAction out;
    out.action.kind = ActionKind::swipe;
    out.action.direction = SwipeDirection::down;
    out.attributed_step = static_cast<int>(cursor);
    out.confidence = 0.5;
    return out;
  }

  return std::nullopt;
}

StateSnapshot make_snapshot(
    const simenv::UiState& state,
    const std::vector<simenv::DistilledControl>& controls) {
  StateSnapshot snap;
  snap.screen_id = state.screen_id;
  snap.visible_texts = simenv::visible_texts(state.root);
  for (const auto& c : controls) snap.distilled_labels.push_back(c.label);
  return snap;
}

PredictorInput build_predictor_input(
    const simenv::UiState& state,
    const std::vector<simenv::DistilledControl>& controls,
    const std::vector<StateSnapshot>& prior_states,
    const std::vector<ActionTrace>& prior_actions,
    const std::vector<std::string>& instructions,
    const std::map<std::string, std::string>& aux_context) {
  if (prior_states.size() != prior_actions.size())
    throw Error("predictor input: state/action history lengths differ");
  PredictorInput input;
  input.ui_context = make_snapshot(state, controls);
  input.controls = controls;
  input.prior_states = prior_states;
  input.prior_actions = prior_actions;
  input.candidates = simenv::candidate_actions(controls, state);
  input.aux_context = aux_context;
  input.instructions = instructions;
  return input;
}

std::optional<PredictedAction> predict_action(const PredictorInput& input,
                                              PredictorInterface& predictor,
                                              std::string* rejection_note) {
  auto pred = predictor.predict(input);
  if (!pred) return std::nullopt;
  if (!input.candidates.contains(pred->action)) {
    if (rejection_note)
      *rejection_note = "predictor " + predictor.id() +
                        " proposed an action outside the candidate set";
    return std::nullopt;
  }
  int n = static_cast<int>(input.instructions.size());
  if (pred->attributed_step < 0 || (n > 0 && pred->attributed_step >= n)) {
    if (rejection_note)
      *rejection_note = "predictor " + predictor.id() +
                        " attributed an out-of-range instruction";
    return std::nullopt;
  }
  return pred;
}

Trajectory run_execution(const std::vector<std::string>& instructions,
                         const simenv::AppScript& script,
                         PredictorInterface& predictor,
                         const ExecutionLimits& limits,
                         const ExecutionContext& context) {
  if (instructions.empty())
    throw Error("run_execution requires grounded instructions");
  if (limits.max_steps < 1) throw Error("max_steps must be >= 1");

  Trajectory traj;
  traj.page_id = context.page_id;
  traj.query_id = context.query_id;

  simenv::UiState state = simenv::initial_state(script);
  std::vector<StateSnapshot> prior_states;
  std::vector<ActionTrace> prior_actions;
  int consecutive_rejections = 0;
  traj.termination = Termination::max_steps;

  for (int t = 1; t <= limits.max_steps; ++t) {
    auto controls = simenv::distill_controls(state.root);
    simenv::annotate_toggle_support(controls, state.screen_id, script);
    PredictorInput input = build_predictor_input(
        state, controls, prior_states, prior_actions, instructions,
        context.aux_context);
    auto pred = predict_action(input, predictor);
    if (!pred) {
      traj.termination = Termination::stuck;
      break;
    }

    simenv::ActionResult result = simenv::apply_action(state, pred->action, script);

    TrajectoryStep step;
    step.state = input.ui_context;
    step.action = pred->action;
    step.attributed_step = pred->attributed_step;
    step.status = result.status;
    step.wall_time = static_cast<double>(t);
    traj.steps.push_back(step);

    prior_states.push_back(input.ui_context);
    prior_actions.push_back(
        ActionTrace{simenv::action_description(pred->action),
                    result.status != ApplyStatus::rejected});

    if (pred->action.kind == ActionKind::done) {
      traj.termination = Termination::completed;
      break;
    }
    if (result.status == ApplyStatus::rejected) {
      if (++consecutive_rejections >= 2) {
        traj.termination = Termination::stuck;
        break;
      }
    } else {
      consecutive_rejections = 0;
      state = result.new_state;
    }
    if (lexical_cursor(instructions, prior_actions) >= instructions.size()) {
      traj.termination = Termination::completed;
      break;
    }
  }
  return traj;
}

double AttributionJudge::score(const Trajectory& traj,
                               const std::vector<std::string>& instructions) {
  if (instructions.empty()) return 0.0;
  std::set<int> attributed;
  for (const auto& step : traj.steps) {
    if (step.status == ApplyStatus::rejected) continue;
    if (step.action.kind == ActionKind::done) continue;
    if (step.attributed_step >= 0 &&
        step.attributed_step < static_cast<int>(instructions.size()))
      attributed.insert(step.attributed_step);
  }
  double ratio = static_cast<double>(attributed.size()) /
                 static_cast<double>(instructions.size());
  return std::round(ratio * 100.0) / 100.0;
}

std::shared_ptr<CompletionJudgeInterface> default_completion_judge() {
  return std::make_shared<AttributionJudge>();
}

double judge_completion(const Trajectory& traj,
                        const std::vector<std::string>& instructions,
                        CompletionJudgeInterface& judge) {
  double v = judge.score(traj, instructions);
  if (!(v >= 0.0 && v <= 1.0))
    throw Error("completion judge " + judge.id() +
                " returned a score outside [0,1]");
  return v;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

json action_to_json(const ActionRequest& a) {
  json j;
  j["kind"] = simenv::to_string(a.kind);
  if (a.control_index) j["control_index"] = *a.control_index;
  if (!a.control_label.empty()) j["control_label"] = a.control_label;
  if (a.text_value) j["text_value"] = *a.text_value;
  if (a.direction)
    j["direction"] = *a.direction == SwipeDirection::up ? "up" : "down";
  return j;
}

ActionRequest action_from_json(const json& j, const std::string& origin) {
  ActionRequest a;
  a.kind = simenv::action_kind_from_string(j.value("kind", ""));
  if (j.contains("control_index")) a.control_index = j["control_index"].get<int>();
  a.control_label = j.value("control_label", "");
  if (j.contains("text_value")) a.text_value = j["text_value"].get<std::string>();
  if (j.contains("direction")) {
    std::string d = j["direction"].get<std::string>();
    if (d == "up") a.direction = SwipeDirection::up;
    else if (d == "down") a.direction = SwipeDirection::down;
    else throw Error(origin + ": bad swipe direction " + d);
  }
  return a;
}

ApplyStatus status_from_string(const std::string& s, const std::string& origin) {
  if (s == "applied") return ApplyStatus::applied;
  if (s == "applied_via_fallback") return ApplyStatus::applied_via_fallback;
  if (s == "rejected") return ApplyStatus::rejected;
  throw Error(origin + ": unknown apply status " + s);
}

}  // namespace

std::string trajectory_to_json(const Trajectory& traj) {
  json j;
  j["page_id"] = traj.page_id;
  j["query_id"] = traj.query_id;
  j["termination"] = to_string(traj.termination);
  json steps = json::array();
  for (const auto& s : traj.steps) {
    json js;
    js["screen_id"] = s.state.screen_id;
    js["visible_texts"] = s.state.visible_texts;
    js["distilled_controls"] = s.state.distilled_labels;
    js["action"] = action_to_json(s.action);
    js["attributed_step"] = s.attributed_step;
    js["status"] = simenv::to_string(s.status);
    js["wall_time"] = s.wall_time;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

Trajectory trajectory_from_json(const std::string& text,
                                const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(origin + ": trajectory is not valid JSON");
  Trajectory traj;
  traj.page_id = j.value("page_id", "");
  traj.query_id = j.value("query_id", "");
  traj.termination = termination_from_string(j.value("termination", ""));
  for (const auto& js : j["steps"]) {
    TrajectoryStep s;
    s.state.screen_id = js.value("screen_id", "");
    for (const auto& v : js.value("visible_texts", json::array()))
      s.state.visible_texts.push_back(v.get<std::string>());
    for (const auto& v : js.value("distilled_controls", json::array()))
      s.state.distilled_labels.push_back(v.get<std::string>());
    s.action = action_from_json(js.at("action"), origin);
    s.attributed_step = js.value("attributed_step", 0);
    s.status = status_from_string(js.value("status", ""), origin);
    s.wall_time = js.value("wall_time", 0.0);
    traj.steps.push_back(std::move(s));
  }
  return traj;
}

void write_trajectory(const Trajectory& traj,
                      const std::filesystem::path& path) {
  write_file(path, trajectory_to_json(traj) + "\n");
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  return trajectory_from_json(read_file(path), path.string());
}

}  // namespace howto::agent
