// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/synth.hpp"

#include <algorithm>

#include "howto/html.hpp"
#include "howto/pipeline.hpp"
#include "howto/util.hpp"
#include "json.hpp"

namespace howto::eval {

using corpus::CorpusBundle;
using corpus::PageRecord;
using corpus::QueryRecord;
using simenv::AppScript;
using simenv::Transition;
using simenv::TransitionAction;

namespace {

const char* kBogusWords[] = {"quantum", "flux",     "zenith",  "parallax",
                             "obsidian", "krypton", "nimbus",  "vortex"};

std::string capitalize_words(const std::string& s) {
  std::string out = s;
  bool start = true;
  for (char& c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      start = true;
    } else if (start) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      start = false;
    }
  }
  return out;
}

void dfs_tasks(const AppScript& script, const std::string& screen,
               std::vector<const Transition*>& path,
               std::vector<std::string>& visited,
               std::vector<SynthTask>& out, int max_tasks) {
  if (static_cast<int>(out.size()) >= max_tasks) return;
  if (path.size() >= 2 && path.size() <= 4) {
    SynthTask task;
    task.app_name = script.app_name;
    task.app_domain = script.domain;
    for (const Transition* t : path) {
      task.control_path.push_back(t->control_pattern);
      if (!task.phrase.empty()) task.phrase += " ";
      task.phrase += lower_ascii(t->control_pattern);
    }
    out.push_back(std::move(task));
    if (static_cast<int>(out.size()) >= max_tasks) return;
  }
  if (path.size() >= 4) return;
  for (const auto& t : script.transitions) {
    if (t.from != screen || t.action != TransitionAction::click) continue;
    if (std::find(visited.begin(), visited.end(), t.to) != visited.end())
      continue;
    visited.push_back(t.to);
    path.push_back(&t);
    dfs_tasks(script, t.to, path, visited, out, max_tasks);
    path.pop_back();
    visited.pop_back();
  }
}

std::string steps_html(const std::vector<std::string>& steps) {
  std::string out = "<ol>";
  for (const auto& s : steps) out += "<li>" + html::escape_text(s) + "</li>";
  out += "</ol>";
  return out;
}

std::string page_html(const std::string& title, const std::string& intro,
                      const std::vector<std::string>& steps,
                      const std::string& footer) {
  std::string body = "<h1>" + html::escape_text(title) + "</h1><p>" +
                     html::escape_text(intro) + "</p>";
  if (!steps.empty()) body += steps_html(steps);
  body += "<p>" + html::escape_text(footer) + "</p>";
  return "<html><head><title>" + html::escape_text(title) +
         "</title><script>var page=1;</script></head><body>" + body +
         "</body></html>";
}

std::vector<std::string> tap_steps(const SynthTask& task) {
  std::vector<std::string> steps;
  std::string app = capitalize_words(task.app_name);
  for (const auto& control : task.control_path)
    steps.push_back("In " + app + ", tap " + capitalize_words(control) + ".");
  return steps;
}

std::vector<std::string> open_steps(const SynthTask& task) {
  std::vector<std::string> steps;
  std::string app = capitalize_words(task.app_name);
  for (const auto& control : task.control_path)
    steps.push_back("Open " + capitalize_words(control) + " in " + app + ".");
  return steps;
}

std::string bogus_phrase(Rng& rng) {
  size_t count = sizeof(kBogusWords) / sizeof(kBogusWords[0]);
  std::string a = kBogusWords[rng.below(count)];
  std::string b = kBogusWords[rng.below(count)];
  return a + " " + b;
}

}  // namespace

std::vector<SynthTask> derive_tasks(const AppScript& script, int max_tasks) {
  std::vector<SynthTask> out;
  std::vector<const Transition*> path;
  std::vector<std::string> visited{script.initial_screen};
  dfs_tasks(script, script.initial_screen, path, visited, out, max_tasks);
  return out;
}

CorpusBundle generate_synthetic_corpus(const SynthConfig& cfg) {
  if (cfg.apps.empty()) throw Error("synth: no app scripts");
  if (cfg.tasks_per_app < 1) throw Error("synth: tasks_per_app must be >= 1");

  Rng root(cfg.seed);
  CorpusBundle bundle;
  bundle.metadata["generator"] = "synthetic";
  bundle.metadata["seed"] = std::to_string(cfg.seed);

  struct AppTasks {
    const AppScript* script;
    std::vector<SynthTask> tasks;
  };
  std::vector<AppTasks> apps;
  for (const auto& app : cfg.apps) {
    AppTasks at{&app, derive_tasks(app, cfg.tasks_per_app)};
    if (at.tasks.empty())
      throw Error("synth: app " + app.app_name + " yields no tasks");
    apps.push_back(std::move(at));
  }

  int query_counter = 0;
  for (const auto& at : apps) {
    for (size_t ti = 0; ti < at.tasks.size(); ++ti) {
      const SynthTask& task = at.tasks[ti];
      Rng qrng = root.fork(task.app_name).fork(static_cast<uint64_t>(ti));
      ++query_counter;
      std::string qid = "q" + std::to_string(query_counter);

      QueryRecord q;
      q.query_id = qid;
      q.text = "how to " + task.phrase + " in " + task.app_name;
      q.app_domain = task.app_domain;
      q.app_name = task.app_name;
      bundle.queries.push_back(q);

      std::string app_title = capitalize_words(task.app_name);
      std::string phrase_title = capitalize_words(task.phrase);

      struct PendingPage {
        std::string title;
        std::string html;
        int label;
      };
      std::vector<PendingPage> pages;

      for (int i = 0; i < cfg.positives_per_task; ++i) {
        std::string title =
            "How to " + phrase_title + " in " + app_title + " - HelpSite";
        pages.push_back(
            {title,
             page_html(title,
                       "This guide walks through " + task.phrase + " on " +
                           app_title + " step by step.",
                       tap_steps(task),
                       "Tested on the latest " + app_title + " release."),
             1});
      }
      for (int i = 0; i < cfg.swap_positives; ++i) {
        std::string title =
            phrase_title + " guide for " + app_title + " users";
        pages.push_back(
            {title,
             page_html(title,
                       "A community walkthrough covering " + task.phrase + ".",
                       open_steps(task), "Questions welcome in the comments."),
             1});
      }
      for (int i = 0; i < cfg.cross_negatives; ++i) {
        // Prefer a task that starts on a different branch so the decoy is
        // genuinely wrong for this query while still executing fully.
        std::vector<const SynthTask*> others;
        for (const auto& other : at.tasks) {
          if (&other == &task) continue;
          if (!other.control_path.empty() && !task.control_path.empty() &&
              other.control_path.front() == task.control_path.front())
            continue;
          others.push_back(&other);
        }
        if (others.empty()) {
          for (const auto& other : at.tasks)
            if (&other != &task) others.push_back(&other);
        }
        if (others.empty()) break;
        const SynthTask& decoy = *others[qrng.below(others.size())];
        std::string title = "How to " + capitalize_words(decoy.phrase) +
                            " in " + app_title + " - Forum";
        pages.push_back(
            {title,
             page_html(title,
                       "These steps cover " + decoy.phrase + " instead.",
                       tap_steps(decoy), "Worked for me on an older build."),
             0});
      }
      for (int i = 0; i < cfg.failure_negatives; ++i) {
        SynthTask bogus = task;
        for (auto& control : bogus.control_path) control = bogus_phrase(qrng);
        std::string title =
            "How to " + phrase_title + " in " + app_title + " quickly";
        pages.push_back(
            {title,
             page_html(title, "An outdated walkthrough for " + task.phrase + ".",
                       tap_steps(bogus), "Last updated years ago."),
             0});
      }
      for (int i = 0; i < cfg.perturb_negatives; ++i) {
        std::vector<std::string> steps = tap_steps(task);
        if (steps.size() >= 2 && qrng.below(2) == 0) {
          // Delete a non-final step.
          size_t victim = qrng.below(steps.size() - 1);
          steps.erase(steps.begin() + static_cast<long>(victim));
        } else {
          size_t victim = qrng.below(steps.size());
          steps[victim] =
              "In " + app_title + ", tap " + capitalize_words(bogus_phrase(qrng)) + ".";
        }
        std::string title =
            "How to " + phrase_title + " in " + app_title + " (mirror)";
        pages.push_back(
            {title,
             page_html(title, "Steps reposted without verification.", steps,
                       "Source unknown."),
             0});
      }
      for (int i = 0; i < cfg.filler_pages; ++i) {
        std::string title = "Notes about " + bogus_phrase(qrng) + " hardware";
        pages.push_back(
            {title,
             page_html(title,
                       "General discussion with no actionable steps at all.",
                       {}, "Thread closed by moderators."),
             0});
      }

      std::vector<int> ranks(pages.size());
      for (size_t i = 0; i < ranks.size(); ++i) ranks[i] = static_cast<int>(i) + 1;
      qrng.shuffle(ranks);

      for (size_t pi = 0; pi < pages.size(); ++pi) {
        PageRecord p;
        p.page_id = qid + "-p" + std::to_string(pi + 1);
        p.query_id = qid;
        p.url = "https://example.org/" + task.app_name + "/" + qid + "/" +
                std::to_string(pi + 1);
        p.original_rank = ranks[pi];
        p.title = pages[pi].title;
        p.raw_html = pages[pi].html;
        p.label = pages[pi].label;
        bundle.pages.push_back(std::move(p));
      }
    }
  }
  return bundle;
}

SynthOutput generate_synthetic_dataset(const SynthConfig& cfg) {
  SynthOutput out;
  out.corpus = generate_synthetic_corpus(cfg);

  auto generator = extract::default_generator();
  auto embedder = extract::default_embedder();
  auto extractions = pipeline::extract_bundle(out.corpus, *generator,
                                              *embedder, {});

  std::map<std::string, AppScript> scripts;
  for (const auto& app : cfg.apps) scripts[app.app_name] = app;

  agent::LexicalPredictor predictor;
  out.trajectories = pipeline::execute_bundle(out.corpus, extractions, scripts,
                                              predictor, {}, {}, 1);

  auto relevance = features::default_relevance_judge();
  auto completion = agent::default_completion_judge();
  out.groups = pipeline::assemble_groups(out.corpus, extractions,
                                         out.trajectories, *relevance,
                                         *completion, features::default_lexicon());

  for (const auto& page : out.corpus.pages) {
    if (page.label.value_or(0) == 1)
      ++out.positives;
    else
      ++out.negatives;
  }
  return out;
}

SplitAssignment split_queries(const CorpusBundle& bundle, uint64_t seed) {
  std::vector<std::string> qids;
  for (const auto& q : bundle.queries) qids.push_back(q.query_id);
  Rng rng = Rng(seed).fork("split");
  rng.shuffle(qids);
  size_t n = qids.size();
  size_t n_val = n / 10;
  size_t n_test = n / 10;
  SplitAssignment split;
  for (size_t i = 0; i < n; ++i) {
    if (i < n_val)
      split.val.push_back(qids[i]);
    else if (i < n_val + n_test)
      split.test.push_back(qids[i]);
    else
      split.train.push_back(qids[i]);
  }
  // Stable file output regardless of shuffle order.
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::string split_to_json(const SplitAssignment& split) {
  nlohmann::json j;
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  return j.dump(2);
}

SplitAssignment split_from_json(const std::string& text,
                                const std::string& origin) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(origin + ": split file is not valid JSON");
  SplitAssignment split;
  split.train = j.at("train").get<std::vector<std::string>>();
  split.val = j.at("val").get<std::vector<std::string>>();
  split.test = j.at("test").get<std::vector<std::string>>();
  return split;
}

}  // namespace howto::eval
