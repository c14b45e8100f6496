// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace howto::simenv {

struct Rect {
  int left = 0, top = 0, right = 0, bottom = 0;

  bool contains(const Rect& other) const {
    return other.left >= left && other.top >= top && other.right <= right &&
           other.bottom <= bottom;
  }
  bool empty() const { return right <= left || bottom <= top; }
};

/// One node of a screen's UI tree. Empty text/content_desc mean "absent".
struct Region {
  std::string region_id;
  std::string text;
  std::string content_desc;
  bool visible = true;
  bool actionable = false;
  bool scrollable = false;
  bool editable = false;
  Rect bounds;
  std::vector<Region> children;
};

struct Screen {
  std::string screen_id;
  Region root;
};

/// Action kinds a transition can react to. Swipes are directional here so a
/// script can distinguish scrolling down from scrolling back up.
enum class TransitionAction { click, input, toggle, swipe_up, swipe_down };

struct Transition {
  std::string from;
  std::string control_pattern;  // token-subset match on the control label
  TransitionAction action = TransitionAction::click;
  std::string to;
  std::map<std::string, std::string> effects;
};

struct AppScript {
  std::string app_name;
  std::string domain = "Other";
  std::string initial_screen;
  std::vector<Screen> screens;
  std::vector<Transition> transitions;

  const Screen* find_screen(const std::string& screen_id) const;
};

inline constexpr size_t kBackStackLimit = 32;

struct UiState {
  std::string screen_id;
  Region root;
  std::map<std::string, std::string> fields;
  std::vector<std::string> back_stack;
};

struct DistilledControl {
  int control_index = 0;
  std::string label;
  bool can_click = true;
  bool can_input = false;
  bool can_swipe = false;
  bool can_toggle = false;
  std::string source_region_id;

  std::vector<std::string> actions_supported() const;
};

enum class ActionKind { click, input, swipe, back, done };
enum class SwipeDirection { up, down };

const char* to_string(ActionKind k);
ActionKind action_kind_from_string(const std::string& s);

struct ActionRequest {
  ActionKind kind = ActionKind::click;
  std::optional<int> control_index;
  std::string control_label;  // label as seen by the requester
  std::optional<std::string> text_value;
  std::optional<SwipeDirection> direction;
};

/// "click Sound", "swipe down", "input Username", ... used for logging and
/// for the action-side reranking features.
std::string action_description(const ActionRequest& req);

enum class ApplyStatus { applied, applied_via_fallback, rejected };

const char* to_string(ApplyStatus s);

struct ActionResult {
  ApplyStatus status = ApplyStatus::rejected;
  UiState new_state;
  std::string note;
};

struct ActionSet {
  std::vector<int> clickable;  // every control
  std::vector<int> editable;   // input targets
  bool can_swipe = false;
  // back and done are always available

  bool contains(const ActionRequest& req) const;
  size_t size() const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

AppScript load_app_script(const std::filesystem::path& path);
AppScript app_script_from_json_text(const std::string& text,
                                    const std::string& origin = "<memory>");

/// Depth-first over visible regions. Every visible actionable region with a
/// resolvable label becomes one control; label falls back to the
/// concatenated texts of its nearest non-actionable descendants, stopping at
/// actionable descendants (which yield their own controls).
std::vector<DistilledControl> distill_controls(const Region& root);

/// Marks can_toggle on controls that a toggle transition of the current
/// screen targets.
void annotate_toggle_support(std::vector<DistilledControl>& controls,
                             const std::string& screen_id,
                             const AppScript& script);

ActionSet candidate_actions(const std::vector<DistilledControl>& controls,
                            const UiState& state);

/// Deterministic action application with the stale-control fallback: if the
/// indexed control is gone but exactly one control's label token-overlaps
/// the requested label at >= 0.5, that control substitutes
/// (applied_via_fallback). Rejected results leave the state unchanged.
ActionResult apply_action(const UiState& state, const ActionRequest& req,
                          const AppScript& script);

UiState initial_state(const AppScript& script);

/// Stable hash over screen, fields and back stack; used to assert that
/// rejected actions have no side effects.
uint64_t state_fingerprint(const UiState& state);

/// Visible text tokens of a screen (region text + content_desc), for the
/// screen-side reranking features.
std::vector<std::string> visible_texts(const Region& root);

}  // namespace howto::simenv
