// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "howto/agent.hpp"

namespace howto::features {

/// Normalized token sequence (case-folded, alphanumeric-split, stopwords
/// removed) with its source kept for debugging.
struct TokenizedText {
  std::vector<std::string> tokens;
  std::string source;

  static TokenizedText from(const std::string& text, std::string source = "");
  size_t length() const { return tokens.size(); }
};

struct KeywordLexicon {
  std::vector<std::string> keywords;  // lowercase, stopword-free, unique
  size_t size() const { return keywords.size(); }
};

/// The shipped 50-keyword how-to lexicon.
const KeywordLexicon& default_lexicon();

inline constexpr int kFeatureCount = 18;

struct FeatureVector {
  std::array<double, kFeatureCount> f{};  // f[0] is F1
  std::string completion_judge_id;
  std::string relevance_judge_id;

  double operator[](int one_based) const { return f.at(one_based - 1); }
};

/// Query-page relevance in [0,1].
class RelevanceJudgeInterface {
 public:
  virtual ~RelevanceJudgeInterface() = default;
  virtual std::string id() const = 0;
  virtual double score(const std::string& query, const std::string& title,
                       const std::vector<std::string>& instructions) = 0;
};

/// Harmonic mean of query-token coverage in the title and in the
/// instructions.
class LexicalRelevanceJudge : public RelevanceJudgeInterface {
 public:
  std::string id() const override { return "lexical-harmonic"; }
  double score(const std::string& query, const std::string& title,
               const std::vector<std::string>& instructions) override;
};

std::shared_ptr<RelevanceJudgeInterface> default_relevance_judge();

// ---------------------------------------------------------------------------
// Per-feature operations. All outputs are clamped to [0,1]; empty inputs
// yield 0 by convention.
// ---------------------------------------------------------------------------

struct Stats4 {
  double mean = 0.0, min = 0.0, max = 0.0, variance = 0.0;
};

/// Population variance; empty input -> all zeros.
Stats4 stats4(const std::vector<double>& values);

double f1_query_term_ratio(const TokenizedText& query,
                           const TokenizedText& instructions);

double f2_relevance(const std::string& query, const std::string& title,
                    const std::vector<std::string>& instructions,
                    RelevanceJudgeInterface& judge);

double f3_keyword_ratio(const TokenizedText& instructions,
                        const KeywordLexicon& lexicon);

double f4_completion(const agent::Trajectory& traj,
                     const std::vector<std::string>& instructions,
                     agent::CompletionJudgeInterface& judge);

/// Per-step token coverage of the instruction set by each action
/// description (all recorded steps).
Stats4 f5_f8_action_term_stats(const agent::Trajectory& traj,
                               const TokenizedText& instructions);

/// Per-step share of visible screen tokens that appear in the instructions.
Stats4 f9_f12_visible_ui_stats(const agent::Trajectory& traj,
                               const TokenizedText& instructions);

/// Same as F9-F12 over distilled control labels.
Stats4 f13_f16_distilled_ui_stats(const agent::Trajectory& traj,
                                  const TokenizedText& instructions);

struct PositionFeatures {
  double last_matched_relative = 0.0;  // F17
  double matched_span = 0.0;           // F18
};

/// Positions (1-based) in the instruction token sequence touched by applied
/// action descriptions; F17 = max/L, F18 = (max-min)/L.
PositionFeatures f17_f18_position_features(const agent::Trajectory& traj,
                                           const TokenizedText& instructions);

struct FeatureInputs {
  std::string query_text;
  std::string page_title;
  std::vector<std::string> instructions;  // grounded step texts
  const agent::Trajectory* trajectory = nullptr;  // null = never executed
};

FeatureVector build_feature_vector(const FeatureInputs& inputs,
                                   RelevanceJudgeInterface& relevance_judge,
                                   agent::CompletionJudgeInterface& completion_judge,
                                   const KeywordLexicon& lexicon);

}  // namespace howto::features
