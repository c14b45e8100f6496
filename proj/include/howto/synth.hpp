// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "howto/agent.hpp"
#include "howto/corpus.hpp"
#include "howto/rerank.hpp"
#include "howto/simenv.hpp"

namespace howto::eval {

/// Page mix generated per task/query. The cross-task pages execute fully
/// but solve the wrong task: the designed noise that keeps a single F4
/// feature from being sufficient.
struct SynthConfig {
  std::vector<simenv::AppScript> apps;
  int tasks_per_app = 2;
  int positives_per_task = 1;
  int swap_positives = 1;      // rephrased positives (query-swap style)
  int failure_negatives = 1;   // bogus target control, execution gets stuck
  int perturb_negatives = 2;   // a positive's steps with a delete/mutate
  int cross_negatives = 1;     // full executions of another task's steps
  int filler_pages = 14;       // instruction-free pages
  uint64_t seed = 7;
};

/// A scripted path through an app: the ground truth behind one query.
struct SynthTask {
  std::string app_name;
  std::string app_domain;
  std::string phrase;                       // e.g. "sound ringtone chime"
  std::vector<std::string> control_path;    // transition patterns, in order
};

/// Click-transition paths of length 2..4 from the initial screen, in
/// deterministic DFS order.
std::vector<SynthTask> derive_tasks(const simenv::AppScript& script,
                                    int max_tasks);

struct SynthOutput {
  corpus::CorpusBundle corpus;
  std::vector<rerank::RankGroup> groups;              // gated, labeled
  std::map<std::string, agent::Trajectory> trajectories;  // by page_id
  size_t positives = 0;
  size_t negatives = 0;
};

/// Builds the corpus (queries, pages with generated HTML, labels) without
/// running the pipeline. Deterministic under cfg.seed.
corpus::CorpusBundle generate_synthetic_corpus(const SynthConfig& cfg);

/// Full op: corpus plus rank groups and trajectories obtained by running
/// extraction, execution and featurization over it.
SynthOutput generate_synthetic_dataset(const SynthConfig& cfg);

struct SplitAssignment {
  std::vector<std::string> train, val, test;  // query ids
};

/// 80/10/10 by query with seeded shuffling; val and test take floor(n/10)
/// each, train the rest.
SplitAssignment split_queries(const corpus::CorpusBundle& bundle,
                              uint64_t seed);

std::string split_to_json(const SplitAssignment& split);
SplitAssignment split_from_json(const std::string& text,
                                const std::string& origin = "<memory>");

}  // namespace howto::eval
