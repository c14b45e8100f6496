// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "howto/agent.hpp"
#include "howto/corpus.hpp"
#include "howto/eval.hpp"
#include "howto/extract.hpp"
#include "howto/rerank.hpp"
#include "howto/synth.hpp"

namespace howto::pipeline {

struct PipelineConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path apps_dir;
  std::filesystem::path work_dir = "work";
  uint64_t seed = 7;
  int jobs = 1;
  extract::GroundingConfig grounding;
  agent::ExecutionLimits limits;
  rerank::ModelConfig model;
  eval::SynthConfig synth;  // apps filled from apps_dir at cmd_synth time
  std::map<std::string, std::string> aux_context;
  /// Pass-through options for external LLM predictors (the built-in lexical
  /// predictor ignores them).
  std::map<std::string, std::string> predictor_options = {
      {"temperature", "0.3"}, {"max_tokens", "300"}};
};

/// Reads the JSON config file; missing keys keep their defaults.
PipelineConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stage runners (in-memory). The cmd_* wrappers below persist artifacts.
// ---------------------------------------------------------------------------

struct PageExtraction {
  std::string page_id;
  std::string query_id;
  std::string generator_id;
  std::vector<std::string> raw_steps;
  extract::GroundedInstructions grounded;
  bool failed = false;       // HTML beyond recovery
  std::string failure_note;

  std::vector<std::string> step_texts() const;
  bool has_instructions() const { return !grounded.steps.empty(); }
};

std::vector<PageExtraction> extract_bundle(
    const corpus::CorpusBundle& bundle, extract::GeneratorInterface& generator,
    extract::EmbedderInterface& embedder,
    const extract::GroundingConfig& grounding);

/// Executes every grounded page against its query's app script. Missing
/// scripts and execution errors are recorded, not fatal. jobs > 1 runs
/// pages on a worker pool; artifacts are independent of jobs.
std::map<std::string, agent::Trajectory> execute_bundle(
    const corpus::CorpusBundle& bundle,
    const std::vector<PageExtraction>& extractions,
    const std::map<std::string, simenv::AppScript>& scripts_by_app,
    agent::PredictorInterface& predictor, const agent::ExecutionLimits& limits,
    const std::map<std::string, std::string>& aux_context, int jobs,
    std::vector<std::string>* failures = nullptr);

/// Feature vectors + gate for every page, grouped per query, items in
/// original-rank order.
std::vector<rerank::RankGroup> assemble_groups(
    const corpus::CorpusBundle& bundle,
    const std::vector<PageExtraction>& extractions,
    const std::map<std::string, agent::Trajectory>& trajectories,
    features::RelevanceJudgeInterface& relevance_judge,
    agent::CompletionJudgeInterface& completion_judge,
    const features::KeywordLexicon& lexicon);

// ---------------------------------------------------------------------------
// Subcommands over persisted artifacts. Each returns 0 on a complete
// artifact set and logs per-page failures to stderr without aborting.
// ---------------------------------------------------------------------------

int cmd_extract(const PipelineConfig& config);
int cmd_execute(const PipelineConfig& config);
int cmd_featurize(const PipelineConfig& config);
int cmd_synth(const PipelineConfig& config);
/// kind: one of the model kinds or "all".
int cmd_train(const PipelineConfig& config, const std::string& kind);
int cmd_rerank(const PipelineConfig& config);
/// split: train|val|test|all (all when no split file exists).
int cmd_eval(const PipelineConfig& config, const std::string& split = "all");

// Artifact (de)serialization shared by subcommands and tests.
std::string extraction_to_jsonl(const std::vector<PageExtraction>& extractions);
std::vector<PageExtraction> extraction_from_jsonl(const std::string& text,
                                                  const std::string& origin);
std::map<std::string, simenv::AppScript> load_app_scripts(
    const std::filesystem::path& apps_dir);

/// Rebuilds rank groups from persisted artifacts under work_dir.
std::vector<rerank::RankGroup> load_groups(const PipelineConfig& config);

}  // namespace howto::pipeline
