// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include "howto/util.hpp"
#include "json.hpp"

namespace howto::pipeline {

using nlohmann::json;

std::vector<std::string> PageExtraction::step_texts() const {
  std::vector<std::string> out;
  for (const auto& s : grounded.steps) out.push_back(s.text);
  return out;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded())
    throw Error(path.string() + ": config is not valid JSON");
  PipelineConfig c;
  if (j.contains("corpus")) c.corpus_path = j["corpus"].get<std::string>();
  if (j.contains("apps_dir")) c.apps_dir = j["apps_dir"].get<std::string>();
  if (j.contains("work_dir")) c.work_dir = j["work_dir"].get<std::string>();
  c.seed = j.value("seed", static_cast<uint64_t>(7));
  c.jobs = j.value("jobs", 1);
  if (j.contains("grounding")) {
    c.grounding.rouge_min = j["grounding"].value("rouge_min", 0.7);
    c.grounding.embed_dist_max = j["grounding"].value("embed_dist_max", 0.25);
  }
  if (j.contains("limits")) {
    c.limits.max_steps = j["limits"].value("max_steps", 28);
    c.limits.per_action_timeout_s =
        j["limits"].value("per_action_timeout_s", 30.0);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    rerank::ModelConfig& mc = c.model;
    mc.embed_width = m.value("embed_width", mc.embed_width);
    mc.model_width = m.value("model_width", mc.model_width);
    mc.blocks = m.value("blocks", mc.blocks);
    mc.dropout = m.value("dropout", mc.dropout);
    mc.heads = m.value("heads", mc.heads);
    mc.ff_width = m.value("ff_width", mc.ff_width);
    mc.tau = m.value("tau", mc.tau);
    mc.mu = m.value("mu", mc.mu);
    mc.sigma = m.value("sigma", mc.sigma);
    mc.lr = m.value("lr", mc.lr);
    mc.scheduler_step = m.value("scheduler_step", mc.scheduler_step);
    mc.scheduler_gamma = m.value("scheduler_gamma", mc.scheduler_gamma);
    mc.epochs = m.value("epochs", mc.epochs);
    mc.patience = m.value("patience", mc.patience);
    mc.batch_groups = m.value("batch_groups", mc.batch_groups);
  }
  if (j.contains("synth")) {
    const json& s = j["synth"];
    eval::SynthConfig& sc = c.synth;
    sc.tasks_per_app = s.value("tasks_per_app", sc.tasks_per_app);
    sc.positives_per_task = s.value("positives_per_task", sc.positives_per_task);
    sc.swap_positives = s.value("swap_positives", sc.swap_positives);
    sc.failure_negatives = s.value("failure_negatives", sc.failure_negatives);
    sc.perturb_negatives = s.value("perturb_negatives", sc.perturb_negatives);
    sc.cross_negatives = s.value("cross_negatives", sc.cross_negatives);
    sc.filler_pages = s.value("filler_pages", sc.filler_pages);
  }
  if (j.contains("aux_context")) {
    for (auto& [k, v] : j["aux_context"].items())
      c.aux_context[k] = v.get<std::string>();
  }
  if (j.contains("predictor")) {
    for (auto& [k, v] : j["predictor"].items())
      c.predictor_options[k] =
          v.is_string() ? v.get<std::string>() : v.dump();
  }
  c.model.seed = c.seed;
  c.synth.seed = c.seed;
  return c;
}

// ---------------------------------------------------------------------------
// Stage runners
// ---------------------------------------------------------------------------

std::vector<PageExtraction> extract_bundle(
    const corpus::CorpusBundle& bundle, extract::GeneratorInterface& generator,
    extract::EmbedderInterface& embedder,
    const extract::GroundingConfig& grounding) {
  std::vector<PageExtraction> out;
  out.reserve(bundle.pages.size());
  for (const auto& page : bundle.pages) {
    PageExtraction pe;
    pe.page_id = page.page_id;
    pe.query_id = page.query_id;
    pe.generator_id = generator.id();
    const corpus::QueryRecord* query = bundle.find_query(page.query_id);
    try {
      extract::CleanedHtml cleaned =
          extract::clean_html(page.raw_html, page.page_id);
      auto snippets = extract::index_snippets(cleaned);
      extract::QueryContext qc{query->text, query->app_name};
      extract::ExtractionResult result =
          extract::generate_instructions(qc, page.title, cleaned, generator);
      pe.raw_steps = result.steps;
      pe.grounded =
          extract::ground_instructions(result, snippets, embedder, grounding);
    } catch (const Error& e) {
      pe.failed = true;
      pe.failure_note = e.what();
      pe.grounded = {};
    }
    out.push_back(std::move(pe));
  }
  return out;
}

std::map<std::string, agent::Trajectory> execute_bundle(
    const corpus::CorpusBundle& bundle,
    const std::vector<PageExtraction>& extractions,
    const std::map<std::string, simenv::AppScript>& scripts_by_app,
    agent::PredictorInterface& predictor, const agent::ExecutionLimits& limits,
    const std::map<std::string, std::string>& aux_context, int jobs,
    std::vector<std::string>* failures) {
  struct Job {
    const PageExtraction* extraction;
    const simenv::AppScript* script;
  };
  std::vector<Job> todo;
  for (const auto& pe : extractions) {
    if (!pe.has_instructions()) continue;
    const corpus::QueryRecord* query = bundle.find_query(pe.query_id);
    if (query == nullptr) continue;
    auto it = scripts_by_app.find(query->app_name);
    if (it == scripts_by_app.end()) {
      if (failures)
        failures->push_back(pe.page_id + ": no app script for \"" +
                            query->app_name + "\"");
      continue;
    }
    todo.push_back({&pe, &it->second});
  }

  std::vector<std::optional<agent::Trajectory>> results(todo.size());
  std::vector<std::string> errors(todo.size());
  auto work = [&](size_t i) {
    const Job& job = todo[i];
    try {
      agent::ExecutionContext ctx{job.extraction->page_id,
                                  job.extraction->query_id, aux_context};
      results[i] = agent::run_execution(job.extraction->step_texts(),
                                        *job.script, predictor, limits, ctx);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  };

  if (jobs <= 1) {
    for (size_t i = 0; i < todo.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < todo.size();
             i = next.fetch_add(1))
          work(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::map<std::string, agent::Trajectory> out;
  for (size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) {
      out[todo[i].extraction->page_id] = std::move(*results[i]);
    } else if (failures) {
      failures->push_back(todo[i].extraction->page_id + ": " + errors[i]);
    }
  }
  return out;
}

std::vector<rerank::RankGroup> assemble_groups(
    const corpus::CorpusBundle& bundle,
    const std::vector<PageExtraction>& extractions,
    const std::map<std::string, agent::Trajectory>& trajectories,
    features::RelevanceJudgeInterface& relevance_judge,
    agent::CompletionJudgeInterface& completion_judge,
    const features::KeywordLexicon& lexicon) {
  std::map<std::string, const PageExtraction*> extraction_of;
  for (const auto& pe : extractions) extraction_of[pe.page_id] = &pe;

  std::vector<rerank::RankGroup> groups;
  for (const auto& query : bundle.queries) {
    rerank::RankGroup group;
    group.query_id = query.query_id;
    for (const auto* page : bundle.pages_of(query.query_id)) {
      rerank::RankItem item;
      item.page_id = page->page_id;
      item.label = page->label;
      item.original_rank = page->original_rank;

      const PageExtraction* pe = nullptr;
      auto it = extraction_of.find(page->page_id);
      if (it != extraction_of.end()) pe = it->second;

      features::FeatureInputs inputs;
      inputs.query_text = query.text;
      inputs.page_title = page->title;
      const agent::Trajectory* traj = nullptr;
      if (pe != nullptr) {
        inputs.instructions = pe->step_texts();
        item.has_instructions = pe->has_instructions();
        item.grounding = pe->grounded.status;
        auto tit = trajectories.find(page->page_id);
        if (tit != trajectories.end()) traj = &tit->second;
      }
      inputs.trajectory = traj;
      if (traj != nullptr) item.applied_actions = traj->applied_count();
      try {
        item.features = features::build_feature_vector(
            inputs, relevance_judge, completion_judge, lexicon);
      } catch (const Error&) {
        // Feature-stage failure: the page keeps zeroed features and is
        // excluded from the verified set.
        item.features = features::FeatureVector{};
        item.stage_failed = true;
      }
      group.items.push_back(std::move(item));
    }
    std::sort(group.items.begin(), group.items.end(),
              [](const rerank::RankItem& a, const rerank::RankItem& b) {
                return a.original_rank < b.original_rank;
              });
    rerank::gate_verified(group);
    groups.push_back(std::move(group));
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Artifact formats
// ---------------------------------------------------------------------------

std::string extraction_to_jsonl(
    const std::vector<PageExtraction>& extractions) {
  std::string out;
  for (const auto& pe : extractions) {
    json j;
    j["page_id"] = pe.page_id;
    j["query_id"] = pe.query_id;
    j["generator_id"] = pe.generator_id;
    j["raw_steps"] = pe.raw_steps;
    j["status"] = extract::to_string(pe.grounded.status);
    json steps = json::array();
    for (const auto& s : pe.grounded.steps) {
      json js;
      js["text"] = s.text;
      js["snippet_index"] = s.snippet_index;
      js["xpath"] = s.xpath;
      js["rouge"] = s.rouge;
      js["embed_distance"] = s.embed_distance;
      steps.push_back(std::move(js));
    }
    j["grounded_steps"] = std::move(steps);
    j["failed"] = pe.failed;
    if (pe.failed) j["failure_note"] = pe.failure_note;
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::vector<PageExtraction> extraction_from_jsonl(const std::string& text,
                                                  const std::string& origin) {
  std::vector<PageExtraction> out;
  size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw Error(origin + ": extraction line " + std::to_string(line_no) +
                  " is not valid JSON");
    PageExtraction pe;
    pe.page_id = j.at("page_id").get<std::string>();
    pe.query_id = j.at("query_id").get<std::string>();
    pe.generator_id = j.value("generator_id", "");
    pe.raw_steps = j.value("raw_steps", std::vector<std::string>{});
    pe.grounded.status =
        extract::grounding_status_from_string(j.at("status").get<std::string>());
    for (const auto& js : j.value("grounded_steps", json::array())) {
      extract::GroundedStep s;
      s.text = js.at("text").get<std::string>();
      s.snippet_index = js.at("snippet_index").get<int>();
      s.xpath = js.at("xpath").get<std::string>();
      s.rouge = js.at("rouge").get<double>();
      s.embed_distance = js.at("embed_distance").get<double>();
      pe.grounded.steps.push_back(std::move(s));
    }
    pe.failed = j.value("failed", false);
    pe.failure_note = j.value("failure_note", "");
    out.push_back(std::move(pe));
  }
  return out;
}

std::map<std::string, simenv::AppScript> load_app_scripts(
    const std::filesystem::path& apps_dir) {
  if (!std::filesystem::is_directory(apps_dir))
    throw Error("apps_dir is not a directory: " + apps_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(apps_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, simenv::AppScript> out;
  for (const auto& f : files) {
    simenv::AppScript script = simenv::load_app_script(f);
    out[script.app_name] = std::move(script);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path extraction_path(const PipelineConfig& c) {
  return c.work_dir / "extraction.jsonl";
}
std::filesystem::path features_path(const PipelineConfig& c) {
  return c.work_dir / "features.jsonl";
}
std::filesystem::path splits_path(const PipelineConfig& c) {
  return c.work_dir / "splits.json";
}
std::filesystem::path models_dir(const PipelineConfig& c) {
  return c.work_dir / "models";
}

corpus::CorpusBundle load_bundle(const PipelineConfig& config) {
  if (config.corpus_path.empty())
    throw Error("config: corpus path not set");
  return corpus::load_corpus(config.corpus_path);
}

std::vector<PageExtraction> load_extractions(const PipelineConfig& config) {
  auto path = extraction_path(config);
  if (!std::filesystem::exists(path))
    throw Error("missing extraction artifact (run extract first): " +
                path.string());
  return extraction_from_jsonl(read_file(path), path.string());
}

std::map<std::string, agent::Trajectory> load_trajectories(
    const PipelineConfig& config) {
  std::map<std::string, agent::Trajectory> out;
  auto index_path = config.work_dir / "trajectories" / "index.json";
  if (!std::filesystem::exists(index_path)) return out;
  json index = json::parse(read_file(index_path));
  for (const auto& e : index.at("executions")) {
    std::filesystem::path p =
        config.work_dir / "trajectories" / e.at("path").get<std::string>();
    agent::Trajectory traj = agent::read_trajectory(p);
    out[traj.page_id] = std::move(traj);
  }
  return out;
}

}  // namespace

int cmd_extract(const PipelineConfig& config) {
  corpus::CorpusBundle bundle = load_bundle(config);
  auto generator = extract::default_generator();
  auto embedder = extract::default_embedder();
  auto extractions =
      extract_bundle(bundle, *generator, *embedder, config.grounding);

  size_t full = 0, partial = 0, none = 0, failed = 0;
  // Table rows: extraction outcome split by the human label when present.
  std::map<std::string, int> by_label;
  std::map<std::string, const corpus::PageRecord*> page_of;
  for (const auto& p : bundle.pages) page_of[p.page_id] = &p;
  for (const auto& pe : extractions) {
    if (pe.failed) {
      ++failed;
      std::fprintf(stderr, "extract: skipped page %s: %s\n",
                   pe.page_id.c_str(), pe.failure_note.c_str());
    }
    std::string status = extract::to_string(pe.grounded.status);
    if (pe.grounded.status == extract::GroundingStatus::full) ++full;
    else if (pe.grounded.status == extract::GroundingStatus::partial) ++partial;
    else ++none;
    const corpus::PageRecord* page = page_of[pe.page_id];
    std::string label = !page->label ? "unlabeled"
                        : (*page->label == 1 ? "relevant" : "irrelevant");
    ++by_label[status + "/" + label];
  }

  write_file(extraction_path(config), extraction_to_jsonl(extractions));
  json summary;
  summary["pages"] = bundle.pages.size();
  summary["full"] = full;
  summary["partial"] = partial;
  summary["none"] = none;
  summary["failed"] = failed;
  json rows = json::array();
  for (const auto& [key, count] : by_label) {
    json r;
    r["category"] = key;
    r["count"] = count;
    rows.push_back(std::move(r));
  }
  summary["by_label"] = std::move(rows);
  write_file(config.work_dir / "extract_summary.json", summary.dump(2) + "\n");
  std::fprintf(stderr,
               "extract: %zu pages, %zu full, %zu partial, %zu none, %zu failed\n",
               bundle.pages.size(), full, partial, none, failed);
  return 0;
}

int cmd_execute(const PipelineConfig& config) {
  corpus::CorpusBundle bundle = load_bundle(config);
  auto extractions = load_extractions(config);
  auto scripts = load_app_scripts(config.apps_dir);
  agent::LexicalPredictor predictor;
  std::vector<std::string> failures;
  auto trajectories =
      execute_bundle(bundle, extractions, scripts, predictor, config.limits,
                     config.aux_context, std::max(1, config.jobs), &failures);

  std::filesystem::path dir = config.work_dir / "trajectories";
  std::filesystem::create_directories(dir);
  json index;
  json execs = json::array();
  for (const auto& [page_id, traj] : trajectories) {
    std::string file = page_id + ".json";
    agent::write_trajectory(traj, dir / file);
    json e;
    e["page_id"] = page_id;
    e["query_id"] = traj.query_id;
    e["path"] = file;
    e["termination"] = agent::to_string(traj.termination);
    e["step_count"] = traj.step_count();
    execs.push_back(std::move(e));
  }
  index["executions"] = std::move(execs);
  json fails = json::array();
  for (const auto& f : failures) {
    fails.push_back(f);
    std::fprintf(stderr, "execute: %s\n", f.c_str());
  }
  index["failures"] = std::move(fails);
  write_file(dir / "index.json", index.dump(2) + "\n");
  std::fprintf(stderr, "execute: %zu trajectories, %zu failures\n",
               trajectories.size(), failures.size());
  return 0;
}

int cmd_featurize(const PipelineConfig& config) {
  corpus::CorpusBundle bundle = load_bundle(config);
  auto extractions = load_extractions(config);
  auto trajectories = load_trajectories(config);
  auto relevance = features::default_relevance_judge();
  auto completion = agent::default_completion_judge();
  auto groups = assemble_groups(bundle, extractions, trajectories, *relevance,
                                *completion, features::default_lexicon());

  std::string out;
  for (const auto& group : groups) {
    for (const auto& item : group.items) {
      json j;
      j["page_id"] = item.page_id;
      j["query_id"] = group.query_id;
      j["f"] = std::vector<double>(item.features.f.begin(),
                                   item.features.f.end());
      j["relevance_judge"] = item.features.relevance_judge_id;
      j["completion_judge"] = item.features.completion_judge_id;
      j["has_instructions"] = item.has_instructions;
      j["grounding"] = extract::to_string(item.grounding);
      j["applied_actions"] = item.applied_actions;
      if (item.stage_failed) j["stage_failed"] = true;
      out += j.dump();
      out += "\n";
    }
  }
  write_file(features_path(config), out);
  std::fprintf(stderr, "featurize: %zu groups\n", groups.size());
  return 0;
}

std::vector<rerank::RankGroup> load_groups(const PipelineConfig& config) {
  corpus::CorpusBundle bundle = load_bundle(config);
  auto path = features_path(config);
  if (!std::filesystem::exists(path))
    throw Error("missing features artifact (run featurize first): " +
                path.string());

  struct Row {
    features::FeatureVector fv;
    bool has_instructions = false;
    extract::GroundingStatus grounding = extract::GroundingStatus::none;
    size_t applied = 0;
    bool stage_failed = false;
  };
  std::map<std::string, Row> rows;
  for (const auto& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    Row row;
    auto f = j.at("f").get<std::vector<double>>();
    if (f.size() != features::kFeatureCount)
      throw Error(path.string() + ": feature row must have 18 values");
    std::copy(f.begin(), f.end(), row.fv.f.begin());
    row.fv.relevance_judge_id = j.value("relevance_judge", "");
    row.fv.completion_judge_id = j.value("completion_judge", "");
    row.has_instructions = j.value("has_instructions", false);
    row.grounding =
        extract::grounding_status_from_string(j.value("grounding", "none"));
    row.applied = j.value("applied_actions", static_cast<size_t>(0));
    row.stage_failed = j.value("stage_failed", false);
    rows[j.at("page_id").get<std::string>()] = std::move(row);
  }

  std::vector<rerank::RankGroup> groups;
  for (const auto& query : bundle.queries) {
    rerank::RankGroup group;
    group.query_id = query.query_id;
    for (const auto* page : bundle.pages_of(query.query_id)) {
      auto it = rows.find(page->page_id);
      if (it == rows.end())
        throw Error("features artifact lacks page " + page->page_id);
      rerank::RankItem item;
      item.page_id = page->page_id;
      item.label = page->label;
      item.original_rank = page->original_rank;
      item.features = it->second.fv;
      item.has_instructions = it->second.has_instructions;
      item.grounding = it->second.grounding;
      item.applied_actions = it->second.applied;
      item.stage_failed = it->second.stage_failed;
      group.items.push_back(std::move(item));
    }
    std::sort(group.items.begin(), group.items.end(),
              [](const rerank::RankItem& a, const rerank::RankItem& b) {
                return a.original_rank < b.original_rank;
              });
    rerank::gate_verified(group);
    groups.push_back(std::move(group));
  }
  return groups;
}

int cmd_synth(const PipelineConfig& config) {
  auto scripts = load_app_scripts(config.apps_dir);
  eval::SynthConfig cfg = config.synth;
  cfg.seed = config.seed;
  for (const auto& [name, script] : scripts) cfg.apps.push_back(script);
  corpus::CorpusBundle bundle = eval::generate_synthetic_corpus(cfg);

  std::filesystem::create_directories(config.work_dir);
  std::filesystem::path corpus_out = config.corpus_path.empty()
                                         ? config.work_dir / "corpus_synth.jsonl"
                                         : config.corpus_path;
  corpus::save_corpus(bundle, corpus_out);
  eval::SplitAssignment split = eval::split_queries(bundle, config.seed);
  write_file(splits_path(config), eval::split_to_json(split) + "\n");

  size_t positives = 0;
  for (const auto& p : bundle.pages)
    if (p.label.value_or(0) == 1) ++positives;
  std::fprintf(stderr,
               "synth: %zu queries, %zu pages (%zu positive, %zu negative), "
               "split %zu/%zu/%zu\n",
               bundle.queries.size(), bundle.pages.size(), positives,
               bundle.pages.size() - positives, split.train.size(),
               split.val.size(), split.test.size());
  return 0;
}

namespace {

std::vector<rerank::RankGroup> filter_groups(
    const std::vector<rerank::RankGroup>& groups,
    const std::vector<std::string>& query_ids) {
  std::set<std::string> wanted(query_ids.begin(), query_ids.end());
  std::vector<rerank::RankGroup> out;
  for (const auto& g : groups)
    if (wanted.count(g.query_id)) out.push_back(g);
  return out;
}

}  // namespace

int cmd_train(const PipelineConfig& config, const std::string& kind) {
  auto groups = load_groups(config);

  eval::SplitAssignment split;
  if (std::filesystem::exists(splits_path(config))) {
    split = eval::split_from_json(read_file(splits_path(config)),
                                  splits_path(config).string());
  } else {
    corpus::CorpusBundle bundle = load_bundle(config);
    split = eval::split_queries(bundle, config.seed);
    write_file(splits_path(config), eval::split_to_json(split) + "\n");
    std::fprintf(stderr, "train: no splits file, wrote %s\n",
                 splits_path(config).string().c_str());
  }
  auto train_groups = filter_groups(groups, split.train);
  auto val_groups = filter_groups(groups, split.val);

  std::vector<std::string> kinds;
  if (kind == "all") {
    kinds = {"pairwise_lr", "tmlp_neuralndcg", "tmlp_lambdaloss"};
  } else {
    kinds = {kind};
  }
  std::filesystem::create_directories(models_dir(config));
  for (const auto& k : kinds) {
    rerank::ModelKind mk = rerank::model_kind_from_string(k);
    rerank::ModelConfig mc = config.model;
    mc.model_kind = mk;
    rerank::TrainedModel model;
    if (mk == rerank::ModelKind::pairwise_lr) {
      model = rerank::train_pairwise_lr(train_groups, val_groups, mc);
    } else {
      model = rerank::train_tmlp(train_groups, val_groups, mc,
                                 mk == rerank::ModelKind::tmlp_neuralndcg
                                     ? rerank::TmlpLoss::neuralndcg
                                     : rerank::TmlpLoss::lambdaloss);
    }
    rerank::save_model(model, models_dir(config) / (k + ".json"));
    double best = 0.0;
    for (const auto& h : model.history) best = std::max(best, h.val_ndcg5);
    std::fprintf(stderr, "train: %s val NDCG@5 %.4f (%zu epochs recorded)\n",
                 k.c_str(), best, model.history.size());
  }
  return 0;
}

int cmd_rerank(const PipelineConfig& config) {
  auto groups = load_groups(config);
  std::filesystem::path dir = config.work_dir / "orderings";
  std::filesystem::create_directories(dir);
  size_t emitted = 0;
  for (const auto& kind :
       {"pairwise_lr", "tmlp_neuralndcg", "tmlp_lambdaloss"}) {
    std::filesystem::path model_path =
        models_dir(config) / (std::string(kind) + ".json");
    if (!std::filesystem::exists(model_path)) continue;
    rerank::TrainedModel model = rerank::load_model(model_path);
    std::string out;
    for (const auto& group : groups) {
      json j;
      j["query_id"] = group.query_id;
      j["pages"] = rerank::rerank_group(group, model);
      out += j.dump();
      out += "\n";
    }
    write_file(dir / (std::string(kind) + ".jsonl"), out);
    ++emitted;
  }
  if (emitted == 0) {
    std::fprintf(stderr, "rerank: no trained models under %s\n",
                 models_dir(config).string().c_str());
    return 1;
  }
  std::fprintf(stderr, "rerank: wrote %zu ordering files\n", emitted);
  return 0;
}

int cmd_eval(const PipelineConfig& config, const std::string& split_name) {
  auto groups = load_groups(config);
  if (split_name != "all") {
    if (!std::filesystem::exists(splits_path(config)))
      throw Error("eval: split requested but no splits file present");
    auto split = eval::split_from_json(read_file(splits_path(config)),
                                       splits_path(config).string());
    if (split_name == "train") groups = filter_groups(groups, split.train);
    else if (split_name == "val") groups = filter_groups(groups, split.val);
    else if (split_name == "test") groups = filter_groups(groups, split.test);
    else throw Error("eval: unknown split " + split_name);
  }
  if (groups.empty()) throw Error("eval: no groups selected");

  std::vector<eval::MethodOrderings> methods;
  eval::MethodOrderings oracle{"oracle", {}}, baseline{"baseline", {}},
      f4{"f4_based", {}}, rule{"rule", {}};
  bool oracle_ok = true;
  for (const auto& group : groups) {
    auto orderings = eval::baseline_orderings(group);
    if (orderings.oracle)
      oracle.per_query[group.query_id] = *orderings.oracle;
    else
      oracle_ok = false;
    baseline.per_query[group.query_id] = orderings.baseline;
    f4.per_query[group.query_id] = orderings.f4_based;
    rule.per_query[group.query_id] = orderings.rule;
  }
  if (oracle_ok) methods.push_back(std::move(oracle));
  else
    std::fprintf(stderr,
                 "eval: warning: labels incomplete, oracle row omitted\n");
  methods.push_back(std::move(baseline));
  methods.push_back(std::move(f4));
  methods.push_back(std::move(rule));

  for (const auto& kind :
       {"pairwise_lr", "tmlp_neuralndcg", "tmlp_lambdaloss"}) {
    std::filesystem::path model_path =
        models_dir(config) / (std::string(kind) + ".json");
    if (!std::filesystem::exists(model_path)) continue;
    rerank::TrainedModel model = rerank::load_model(model_path);
    eval::MethodOrderings mo{kind, {}};
    for (const auto& group : groups)
      mo.per_query[group.query_id] = rerank::rerank_group(group, model);
    methods.push_back(std::move(mo));
  }

  eval::MetricsReport report =
      eval::evaluate(groups, methods, 10000, config.seed);
  eval::emit_report(report, config.work_dir);
  for (const auto& w : report.warnings)
    std::fprintf(stderr, "eval: warning: %s\n", w.c_str());
  std::fprintf(stderr, "%s", eval::render_methods_tsv(report).c_str());
  return 0;
}

}  // namespace howto::pipeline
