// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/eval.hpp"

#include <algorithm>
#include <cstdio>

#include "howto/util.hpp"
#include "json.hpp"

namespace howto::eval {

using rerank::RankGroup;
using rerank::RankItem;

namespace {

std::vector<const RankItem*> by_original_rank(const RankGroup& group) {
  std::vector<const RankItem*> items;
  for (const auto& item : group.items) items.push_back(&item);
  std::sort(items.begin(), items.end(),
            [](const RankItem* a, const RankItem* b) {
              return a->original_rank < b->original_rank;
            });
  return items;
}

std::vector<std::string> ids(const std::vector<const RankItem*>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto* i : items) out.push_back(i->page_id);
  return out;
}

}  // namespace

BaselineOrderings baseline_orderings(const RankGroup& group) {
  BaselineOrderings out;
  auto base = by_original_rank(group);

  bool all_labeled = std::all_of(base.begin(), base.end(),
                                 [](const RankItem* i) { return i->label.has_value(); });
  if (all_labeled) {
    std::vector<const RankItem*> oracle;
    for (const auto* i : base)
      if (i->label.value() > 0) oracle.push_back(i);
    for (const auto* i : base)
      if (i->label.value() == 0) oracle.push_back(i);
    out.oracle = ids(oracle);
  }

  {
    std::vector<const RankItem*> ordered;
    for (const auto* i : base)
      if (i->has_instructions) ordered.push_back(i);
    for (const auto* i : base)
      if (!i->has_instructions) ordered.push_back(i);
    out.baseline = ids(ordered);
  }

  {
    std::vector<const RankItem*> instr, rest;
    for (const auto* i : base)
      (i->has_instructions ? instr : rest).push_back(i);
    std::stable_sort(instr.begin(), instr.end(),
                     [](const RankItem* a, const RankItem* b) {
                       return a->features[4] > b->features[4];
                     });  // stable keeps original-rank order on F4 ties
    std::vector<const RankItem*> ordered = instr;
    ordered.insert(ordered.end(), rest.begin(), rest.end());
    out.f4_based = ids(ordered);
  }

  {
    std::vector<const RankItem*> promoted, rest;
    for (const auto* i : base)
      (i->features[4] >= 1.0 ? promoted : rest).push_back(i);
    std::vector<const RankItem*> ordered = promoted;
    ordered.insert(ordered.end(), rest.begin(), rest.end());
    out.rule = ids(ordered);
  }
  return out;
}

namespace {

std::vector<int> labels_in_order(const RankGroup& group,
                                 const std::vector<std::string>& ordering) {
  std::map<std::string, int> label_of;
  for (const auto& item : group.items)
    label_of[item.page_id] = item.label.value_or(0);
  std::vector<int> out;
  out.reserve(ordering.size());
  for (const auto& pid : ordering) {
    auto it = label_of.find(pid);
    if (it == label_of.end())
      throw Error("evaluate: ordering names unknown page " + pid);
    out.push_back(it->second);
  }
  return out;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

MetricsReport evaluate(const std::vector<RankGroup>& groups,
                       const std::vector<MethodOrderings>& methods,
                       int resamples, uint64_t seed) {
  if (groups.empty()) throw Error("evaluate: no rank groups");
  MetricsReport report;

  bool any_unlabeled = false;
  for (const auto& g : groups)
    for (const auto& item : g.items)
      if (!item.label) any_unlabeled = true;
  if (any_unlabeled)
    report.warnings.push_back(
        "some pages are unlabeled; missing labels treated as 0");

  // per method: query -> (rr, p1, p5, ndcg5)
  struct Scores {
    std::vector<double> rr, p1, p5, ndcg5;
  };
  std::map<std::string, Scores> per_method;

  for (const auto& method : methods) {
    Scores scores;
    for (const auto& group : groups) {
      auto it = method.per_query.find(group.query_id);
      if (it == method.per_query.end())
        throw Error("evaluate: method " + method.method +
                    " lacks an ordering for query " + group.query_id);
      auto labels = labels_in_order(group, it->second);
      double rr = reciprocal_rank(labels);
      double p1 = precision_at_k(labels, 1);
      double p5 = precision_at_k(labels, 5);
      double n5 = ndcg_at_k(labels, 5);
      scores.rr.push_back(rr);
      scores.p1.push_back(p1);
      scores.p5.push_back(p5);
      scores.ndcg5.push_back(n5);
      report.per_query.push_back(
          {group.query_id, method.method, rr, p1, p5, n5});
    }
    auto mean = [](const std::vector<double>& v) {
      double acc = 0.0;
      for (double x : v) acc += x;
      return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
    };
    report.rows.push_back({method.method, mean(scores.rr), mean(scores.p1),
                           mean(scores.p5), mean(scores.ndcg5)});
    per_method[method.method] = std::move(scores);
  }

  auto baseline_it = per_method.find("baseline");
  if (baseline_it != per_method.end()) {
    for (const auto& [name, scores] : per_method) {
      if (name == "baseline") continue;
      const Scores& base = baseline_it->second;
      report.significance.push_back(
          {name, "baseline", "mrr",
           significance_test(scores.rr, base.rr, resamples, seed)});
      report.significance.push_back(
          {name, "baseline", "p@1",
           significance_test(scores.p1, base.p1, resamples, seed)});
      report.significance.push_back(
          {name, "baseline", "p@5",
           significance_test(scores.p5, base.p5, resamples, seed)});
      report.significance.push_back(
          {name, "baseline", "ndcg@5",
           significance_test(scores.ndcg5, base.ndcg5, resamples, seed)});
    }
  }
  return report;
}

std::string render_methods_tsv(const MetricsReport& report) {
  std::string out = "method\tMRR\tP@1\tP@5\tNDCG@5\n";
  for (const auto& row : report.rows) {
    out += row.method;
    out += "\t" + fmt4(row.mrr);
    out += "\t" + fmt4(row.p1);
    out += "\t" + fmt4(row.p5);
    out += "\t" + fmt4(row.ndcg5);
    out += "\n";
  }
  return out;
}

std::string render_significance_tsv(const MetricsReport& report) {
  std::string out = "method\tvs\tmetric\tp_value\n";
  for (const auto& row : report.significance) {
    out += row.method_a + "\t" + row.method_b + "\t" + row.metric + "\t" +
           fmt4(row.p_value) + "\n";
  }
  return out;
}

std::string render_per_query_jsonl(const MetricsReport& report) {
  std::string out;
  for (const auto& row : report.per_query) {
    nlohmann::json j;
    j["query_id"] = row.query_id;
    j["method"] = row.method;
    j["rr"] = row.rr;
    j["p1"] = row.p1;
    j["p5"] = row.p5;
    j["ndcg5"] = row.ndcg5;
    out += j.dump();
    out += "\n";
  }
  return out;
}

void emit_report(const MetricsReport& report,
                 const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  write_file(directory / "report.tsv", render_methods_tsv(report));
  write_file(directory / "report_queries.jsonl",
             render_per_query_jsonl(report));
  write_file(directory / "report_significance.tsv",
             render_significance_tsv(report));
}

}  // namespace howto::eval
