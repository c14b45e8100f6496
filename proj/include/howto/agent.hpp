// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "howto/simenv.hpp"

namespace howto::agent {

/// Textual stand-in for a screenshot: what the screen showed when an action
/// was chosen.
struct StateSnapshot {
  std::string screen_id;
  std::vector<std::string> visible_texts;
  std::vector<std::string> distilled_labels;
};

/// One prior action, as exposed to the predictor: description plus whether
/// the environment accepted it.
struct ActionTrace {
  std::string description;  // e.g. "click sound settings"
  bool applied = false;
};

struct PredictorInput {
  StateSnapshot ui_context;                      // current screen
  std::vector<simenv::DistilledControl> controls;
  std::vector<StateSnapshot> prior_states;       // length t-1
  std::vector<ActionTrace> prior_actions;        // length t-1
  simenv::ActionSet candidates;
  std::map<std::string, std::string> aux_context;
  std::vector<std::string> instructions;
};

struct PredictedAction {
  simenv::ActionRequest action;
  int attributed_step = 0;
  double confidence = 0.0;
};

class PredictorInterface {
 public:
  virtual ~PredictorInterface() = default;
  virtual std::string id() const = 0;
  /// nullopt means "cannot determine the next action".
  virtual std::optional<PredictedAction> predict(const PredictorInput& input) = 0;
};

/// Token-overlap threshold for both choosing a control and consuming an
/// instruction step.
inline constexpr double kOverlapThreshold = 0.34;

/// Deterministic instruction-following heuristic. Keeps a cursor over the
/// instructions (recomputed from the action history, so the predictor itself
/// is stateless): clicks the best-overlapping control, types aux_context
/// values into editable fields for text-entry steps, swipes down once when
/// nothing matches, and emits done when all steps are consumed.
class LexicalPredictor : public PredictorInterface {
 public:
  explicit LexicalPredictor(double threshold = kOverlapThreshold)
      : threshold_(threshold) {}
  std::string id() const override { return "builtin-lexical"; }
  std::optional<PredictedAction> predict(const PredictorInput& input) override;

 private:
  double threshold_;
};

/// First unconsumed instruction index given the applied-action history.
/// An applied action consumes the cursor step when its description
/// token-overlaps the step at >= threshold.
size_t lexical_cursor(const std::vector<std::string>& instructions,
                      const std::vector<ActionTrace>& prior_actions,
                      double threshold = kOverlapThreshold);

enum class Termination { completed, stuck, max_steps };

const char* to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct TrajectoryStep {
  StateSnapshot state;  // pre-action snapshot
  simenv::ActionRequest action;
  int attributed_step = 0;
  simenv::ApplyStatus status = simenv::ApplyStatus::rejected;
  double wall_time = 0.0;  // simulated ticks, deterministic
};

struct Trajectory {
  std::string page_id;
  std::string query_id;
  std::vector<TrajectoryStep> steps;
  Termination termination = Termination::stuck;

  size_t step_count() const { return steps.size(); }
  size_t applied_count() const;
};

struct ExecutionLimits {
  int max_steps = 28;
  double per_action_timeout_s = 30.0;  // pass-through for external predictors
};

struct ExecutionContext {
  std::string page_id;
  std::string query_id;
  std::map<std::string, std::string> aux_context;
};

StateSnapshot make_snapshot(const simenv::UiState& state,
                            const std::vector<simenv::DistilledControl>& controls);

PredictorInput build_predictor_input(
    const simenv::UiState& state,
    const std::vector<simenv::DistilledControl>& controls,
    const std::vector<StateSnapshot>& prior_states,
    const std::vector<ActionTrace>& prior_actions,
    const std::vector<std::string>& instructions,
    const std::map<std::string, std::string>& aux_context);

/// Wraps predictor.predict and enforces that the returned action is one of
/// input.candidates and its attribution is in range; violations count as
/// "cannot determine" with the reason in *rejection_note.
std::optional<PredictedAction> predict_action(const PredictorInput& input,
                                              PredictorInterface& predictor,
                                              std::string* rejection_note = nullptr);

/// The bounded execution loop: build input, predict, apply, record, until
/// all instructions are consumed, the predictor gives up (or two
/// consecutive rejections), or max_steps is reached.
Trajectory run_execution(const std::vector<std::string>& instructions,
                         const simenv::AppScript& script,
                         PredictorInterface& predictor,
                         const ExecutionLimits& limits,
                         const ExecutionContext& context);

class CompletionJudgeInterface {
 public:
  virtual ~CompletionJudgeInterface() = default;
  virtual std::string id() const = 0;
  virtual double score(const Trajectory& traj,
                       const std::vector<std::string>& instructions) = 0;
};

/// Completion = distinct instruction steps attributed by at least one
/// applied (non-done) action / total steps, rounded to 2 decimals.
class AttributionJudge : public CompletionJudgeInterface {
 public:
  std::string id() const override { return "attribution"; }
  double score(const Trajectory& traj,
               const std::vector<std::string>& instructions) override;
};

std::shared_ptr<CompletionJudgeInterface> default_completion_judge();

double judge_completion(const Trajectory& traj,
                        const std::vector<std::string>& instructions,
                        CompletionJudgeInterface& judge);

// Trajectory persistence (one JSON document per execution).
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text,
                                const std::string& origin = "<memory>");
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace howto::agent
