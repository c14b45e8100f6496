// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "howto/util.hpp"

namespace howto::features {

using agent::Trajectory;

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::unordered_set<std::string> to_set(const std::vector<std::string>& tokens) {
  return std::unordered_set<std::string>(tokens.begin(), tokens.end());
}

std::vector<std::string> action_tokens(const agent::TrajectoryStep& step) {
  return tokenize(simenv::action_description(step.action));
}

// |covered and reference| / |reference| over token sets.
double coverage(const std::unordered_set<std::string>& covered,
                const std::unordered_set<std::string>& reference) {
  if (reference.empty()) return 0.0;
  size_t hit = 0;
  for (const auto& t : reference) hit += covered.count(t);
  return static_cast<double>(hit) / static_cast<double>(reference.size());
}

}  // namespace

TokenizedText TokenizedText::from(const std::string& text, std::string source) {
  TokenizedText t;
  t.tokens = tokenize(text);
  t.source = std::move(source);
  return t;
}

const KeywordLexicon& default_lexicon() {
  // 50 keywords mined by skimming common Android help phrasing; a stand-in
  // for large-scale help-site keyword mining, swappable in code.
  static const KeywordLexicon lexicon{{
      "tap",      "open",     "settings",     "select",  "scroll",
      "menu",     "toggle",   "enable",       "disable", "sign",
      "account",  "click",    "swipe",        "enter",   "type",
      "choose",   "press",    "turn",         "find",    "search",
      "go",       "navigate", "profile",      "password", "username",
      "login",    "logout",   "install",      "update",  "delete",
      "add",      "remove",   "save",         "cancel",  "confirm",
      "check",    "uncheck",  "switch",       "app",     "device",
      "screen",   "button",   "icon",         "list",    "option",
      "notification", "privacy", "permission", "share",   "download",
  }};
  return lexicon;
}

double LexicalRelevanceJudge::score(const std::string& query,
                                    const std::string& title,
                                    const std::vector<std::string>& instructions) {
  auto q = token_set(query);
  if (q.empty()) return 0.0;
  auto title_tokens = token_set(title);
  std::unordered_set<std::string> instr_tokens;
  for (const auto& s : instructions)
    for (const auto& t : tokenize(s)) instr_tokens.insert(t);

  auto overlap = [&](const std::unordered_set<std::string>& b) {
    size_t hit = 0;
    for (const auto& t : q) hit += b.count(t);
    return static_cast<double>(hit) / static_cast<double>(q.size());
  };
  double a = overlap(title_tokens);
  double b = overlap(instr_tokens);
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

std::shared_ptr<RelevanceJudgeInterface> default_relevance_judge() {
  return std::make_shared<LexicalRelevanceJudge>();
}

Stats4 stats4(const std::vector<double>& values) {
  Stats4 s;
  if (values.empty()) return s;
  double sum = 0.0;
  s.min = values.front();
  s.max = values.front();
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.variance = var / static_cast<double>(values.size());
  s.mean = clamp01(s.mean);
  s.min = clamp01(s.min);
  s.max = clamp01(s.max);
  s.variance = clamp01(s.variance);
  return s;
}

double f1_query_term_ratio(const TokenizedText& query,
                           const TokenizedText& instructions) {
  if (instructions.tokens.empty()) return 0.0;
  std::unordered_set<std::string> q(query.tokens.begin(), query.tokens.end());
  size_t hits = 0;
  for (const auto& t : instructions.tokens) hits += q.count(t);
  return clamp01(static_cast<double>(hits) /
                 static_cast<double>(instructions.tokens.size()));
}

double f2_relevance(const std::string& query, const std::string& title,
                    const std::vector<std::string>& instructions,
                    RelevanceJudgeInterface& judge) {
  double v = judge.score(query, title, instructions);
  if (!(v >= 0.0 && v <= 1.0))
    throw Error("relevance judge " + judge.id() +
                " returned a score outside [0,1]");
  return v;
}

double f3_keyword_ratio(const TokenizedText& instructions,
                        const KeywordLexicon& lexicon) {
  if (lexicon.keywords.empty()) throw Error("keyword lexicon is empty");
  if (instructions.tokens.empty()) return 0.0;
  std::unordered_set<std::string> kws(lexicon.keywords.begin(),
                                      lexicon.keywords.end());
  size_t hits = 0;
  for (const auto& t : instructions.tokens) hits += kws.count(t);
  return clamp01(static_cast<double>(hits) /
                 static_cast<double>(instructions.tokens.size()));
}

double f4_completion(const Trajectory& traj,
                     const std::vector<std::string>& instructions,
                     agent::CompletionJudgeInterface& judge) {
  return agent::judge_completion(traj, instructions, judge);
}

Stats4 f5_f8_action_term_stats(const Trajectory& traj,
                               const TokenizedText& instructions) {
  auto instr_set = to_set(instructions.tokens);
  std::vector<double> ratios;
  for (const auto& step : traj.steps)
    ratios.push_back(coverage(to_set(action_tokens(step)), instr_set));
  return stats4(ratios);
}

Stats4 f9_f12_visible_ui_stats(const Trajectory& traj,
                               const TokenizedText& instructions) {
  auto instr_set = to_set(instructions.tokens);
  std::vector<double> ratios;
  for (const auto& step : traj.steps) {
    std::unordered_set<std::string> screen;
    for (const auto& text : step.state.visible_texts)
      for (const auto& t : tokenize(text)) screen.insert(t);
    ratios.push_back(coverage(instr_set, screen));
  }
  return stats4(ratios);
}

Stats4 f13_f16_distilled_ui_stats(const Trajectory& traj,
                                  const TokenizedText& instructions) {
  auto instr_set = to_set(instructions.tokens);
  std::vector<double> ratios;
  for (const auto& step : traj.steps) {
    std::unordered_set<std::string> screen;
    for (const auto& label : step.state.distilled_labels)
      for (const auto& t : tokenize(label)) screen.insert(t);
    ratios.push_back(coverage(instr_set, screen));
  }
  return stats4(ratios);
}

PositionFeatures f17_f18_position_features(const Trajectory& traj,
                                           const TokenizedText& instructions) {
  PositionFeatures out;
  size_t length = instructions.tokens.size();
  if (length == 0) return out;
  std::unordered_set<std::string> applied_tokens;
  for (const auto& step : traj.steps) {
    if (step.status == simenv::ApplyStatus::rejected) continue;
    for (const auto& t : action_tokens(step)) applied_tokens.insert(t);
  }
  size_t first = 0, last = 0;
  bool any = false;
  for (size_t p = 1; p <= length; ++p) {
    if (applied_tokens.count(instructions.tokens[p - 1])) {
      if (!any) first = p;
      last = p;
      any = true;
    }
  }
  if (!any) return out;
  out.last_matched_relative =
      clamp01(static_cast<double>(last) / static_cast<double>(length));
  out.matched_span = clamp01(static_cast<double>(last - first) /
                             static_cast<double>(length));
  return out;
}

FeatureVector build_feature_vector(
    const FeatureInputs& inputs, RelevanceJudgeInterface& relevance_judge,
    agent::CompletionJudgeInterface& completion_judge,
    const KeywordLexicon& lexicon) {
  FeatureVector out;
  out.relevance_judge_id = relevance_judge.id();
  out.completion_judge_id = completion_judge.id();

  std::string joined;
  for (const auto& s : inputs.instructions) {
    joined += s;
    joined += " ";
  }
  TokenizedText instr = TokenizedText::from(joined, "instructions");
  TokenizedText query = TokenizedText::from(inputs.query_text, "query");

  out.f[0] = f1_query_term_ratio(query, instr);
  out.f[1] = f2_relevance(inputs.query_text, inputs.page_title,
                          inputs.instructions, relevance_judge);
  out.f[2] = f3_keyword_ratio(instr, lexicon);

  if (inputs.trajectory == nullptr) return out;  // F4..F18 stay 0
  const Trajectory& traj = *inputs.trajectory;

  out.f[3] = f4_completion(traj, inputs.instructions, completion_judge);
  Stats4 a = f5_f8_action_term_stats(traj, instr);
  out.f[4] = a.mean;
  out.f[5] = a.min;
  out.f[6] = a.max;
  out.f[7] = a.variance;
  Stats4 u = f9_f12_visible_ui_stats(traj, instr);
  out.f[8] = u.mean;
  out.f[9] = u.min;
  out.f[10] = u.max;
  out.f[11] = u.variance;
  Stats4 d = f13_f16_distilled_ui_stats(traj, instr);
  out.f[12] = d.mean;
  out.f[13] = d.min;
  out.f[14] = d.max;
  out.f[15] = d.variance;
  PositionFeatures p = f17_f18_position_features(traj, instr);
  out.f[16] = p.last_matched_relative;
  out.f[17] = p.matched_span;

  for (double v : out.f) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw Error("feature vector component out of range");
  }
  return out;
}

}  // namespace howto::features
