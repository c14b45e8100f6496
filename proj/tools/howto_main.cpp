// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "howto/pipeline.hpp"
#include "howto/util.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string corpus;
  std::string apps_dir;
  std::string work_dir;
  int64_t seed = -1;
  int jobs = 0;
};

howto::pipeline::PipelineConfig resolve(const CommonOpts& opts) {
  howto::pipeline::PipelineConfig config;
  if (!opts.config_path.empty())
    config = howto::pipeline::load_config(opts.config_path);
  if (!opts.corpus.empty()) config.corpus_path = opts.corpus;
  if (!opts.apps_dir.empty()) config.apps_dir = opts.apps_dir;
  if (!opts.work_dir.empty()) config.work_dir = opts.work_dir;
  if (opts.seed >= 0) {
    config.seed = static_cast<uint64_t>(opts.seed);
    config.model.seed = config.seed;
    config.synth.seed = config.seed;
  }
  if (opts.jobs > 0) config.jobs = opts.jobs;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "howto: verify \"How-to\" search results by executing extracted "
      "instructions in a scripted device simulator and reranking by the "
      "outcome"};
  app.require_subcommand(1);

  CommonOpts opts;
  app.add_option("--config", opts.config_path, "JSON configuration file");
  app.add_option("--corpus", opts.corpus, "corpus file (overrides config)");
  app.add_option("--apps-dir", opts.apps_dir,
                 "directory of app scripts (overrides config)");
  app.add_option("--work-dir", opts.work_dir,
                 "artifact directory (overrides config)");
  app.add_option("--seed", opts.seed, "seed for every stochastic component");
  app.add_option("--jobs", opts.jobs, "worker pool size for execute");

  auto* c_extract = app.add_subcommand(
      "extract", "stage 1: clean HTML, generate and ground instructions");
  auto* c_execute = app.add_subcommand(
      "execute", "stage 2: run grounded instructions in the simulator");
  auto* c_featurize =
      app.add_subcommand("featurize", "stage 3 inputs: features F1-F18");
  auto* c_synth = app.add_subcommand(
      "synth", "generate the synthetic labeled corpus and splits");
  auto* c_train = app.add_subcommand("train", "train reranking models");
  std::string kind = "all";
  c_train->add_option(
      "--kind", kind, "pairwise_lr | tmlp_neuralndcg | tmlp_lambdaloss | all");
  auto* c_rerank =
      app.add_subcommand("rerank", "write final orderings per trained model");
  auto* c_eval = app.add_subcommand("eval", "metrics report for all methods");
  std::string split = "all";
  c_eval->add_option("--split", split, "train | val | test | all");

  CLI11_PARSE(app, argc, argv);

  try {
    howto::pipeline::PipelineConfig config = resolve(opts);
    if (c_extract->parsed()) return howto::pipeline::cmd_extract(config);
    if (c_execute->parsed()) return howto::pipeline::cmd_execute(config);
    if (c_featurize->parsed()) return howto::pipeline::cmd_featurize(config);
    if (c_synth->parsed()) return howto::pipeline::cmd_synth(config);
    if (c_train->parsed()) return howto::pipeline::cmd_train(config, kind);
    if (c_rerank->parsed()) return howto::pipeline::cmd_rerank(config);
    if (c_eval->parsed()) return howto::pipeline::cmd_eval(config, split);
  } catch (const howto::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
