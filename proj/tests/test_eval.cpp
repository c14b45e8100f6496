// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "howto/eval.hpp"
#include "howto/synth.hpp"
#include "howto/util.hpp"
#include "howto/pipeline.hpp"

using namespace howto;
using namespace howto::eval;
using rerank::RankGroup;
using rerank::RankItem;

namespace {

RankItem item(const std::string& id, int rank, std::optional<int> label,
              bool has_instructions, double f4) {
  RankItem it;
  it.page_id = id;
  it.original_rank = rank;
  it.label = label;
  it.has_instructions = has_instructions;
  it.features.f[3] = f4;
  return it;
}

// Direct definitional oracles, kept deliberately naive.
double oracle_rr(const std::vector<int>& labels) {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) return 1.0 / (double)(i + 1);
  return 0.0;
}

double oracle_p_at_k(const std::vector<int>& labels, int k) {
  int hits = 0;
  for (int i = 0; i < k; ++i)
    if (i < (int)labels.size() && labels[i] == 1) ++hits;
  return (double)hits / (double)k;
}

double oracle_ndcg(const std::vector<int>& labels, int k) {
  auto dcg = [&](const std::vector<int>& ls) {
    double acc = 0.0;
    for (int i = 0; i < k && i < (int)ls.size(); ++i)
      acc += (std::pow(2.0, ls[i]) - 1.0) / (std::log2(i + 2.0));
    return acc;
  };
  std::vector<int> ideal = labels;
  std::sort(ideal.rbegin(), ideal.rend());
  double best = dcg(ideal);
  return best <= 0.0 ? 0.0 : dcg(labels) / best;
}

}  // namespace

TEST_CASE("metric worked examples") {
  CHECK(reciprocal_rank({0, 0, 0, 1}) == doctest::Approx(0.25));
  CHECK(mrr({{1, 0}, {1, 1}}) == doctest::Approx(1.0));
  CHECK(mrr({{0, 0}, {1}}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(mrr({}), Error);

  CHECK(precision_at_k({1, 0, 0}, 1) == doctest::Approx(1.0));
  CHECK(precision_at_k({1, 0, 1, 0, 0}, 5) == doctest::Approx(0.4));
  // fixed denominator: shorter lists pad as non-relevant
  CHECK(precision_at_k({1}, 5) == doctest::Approx(0.2));

  CHECK(ndcg_at_k({0, 1, 0}, 5) == doctest::Approx(1.0 / std::log2(3.0)));
  CHECK(ndcg_at_k({1, 1, 0, 0}, 5) == doctest::Approx(1.0));
  CHECK(ndcg_at_k({0, 0}, 5) == 0.0);
}

TEST_CASE("metrics agree with definitional oracles exhaustively (n <= 5)") {
  for (int n = 1; n <= 5; ++n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = (mask >> perm[i]) & 1;
        CHECK(reciprocal_rank(labels) == doctest::Approx(oracle_rr(labels)));
        for (int k : {1, 5}) {
          CHECK(precision_at_k(labels, k) ==
                doctest::Approx(oracle_p_at_k(labels, k)));
          CHECK(ndcg_at_k(labels, k) ==
                doctest::Approx(oracle_ndcg(labels, k)));
        }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("MRR equals P@1 when positives only ever sit at rank 1") {
  std::vector<std::vector<int>> queries = {{1, 0, 0}, {0, 0, 0}, {1, 0}};
  double m = mrr(queries);
  double p = 0.0;
  for (const auto& q : queries) p += precision_at_k(q, 1);
  p /= queries.size();
  CHECK(m == doctest::Approx(p));
}

TEST_CASE("baseline orderings follow the documented rules") {
  RankGroup group;
  group.query_id = "q";
  SUBCASE("oracle: positives first, original order inside blocks") {
    group.items.push_back(item("a", 1, 0, false, 0.0));
    group.items.push_back(item("b", 2, 1, false, 0.0));
    group.items.push_back(item("c", 3, 0, false, 0.0));
    auto o = baseline_orderings(group);
    REQUIRE(o.oracle.has_value());
    CHECK(*o.oracle == std::vector<std::string>{"b", "a", "c"});
  }
  SUBCASE("oracle absent when a label is missing") {
    group.items.push_back(item("a", 1, std::nullopt, false, 0.0));
    auto o = baseline_orderings(group);
    CHECK(!o.oracle.has_value());
  }
  SUBCASE("baseline: instruction pages first") {
    group.items.push_back(item("a", 1, 0, false, 0.0));
    group.items.push_back(item("b", 2, 0, true, 0.0));
    group.items.push_back(item("c", 3, 0, true, 0.0));
    auto o = baseline_orderings(group);
    CHECK(o.baseline == std::vector<std::string>{"b", "c", "a"});
  }
  SUBCASE("f4-based: descending F4 with original-rank ties") {
    group.items.push_back(item("a", 1, 0, true, 0.4));
    group.items.push_back(item("b", 2, 0, true, 0.9));
    group.items.push_back(item("c", 3, 0, true, 0.9));
    group.items.push_back(item("d", 4, 0, false, 0.0));
    auto o = baseline_orderings(group);
    CHECK(o.f4_based == std::vector<std::string>{"b", "c", "a", "d"});
  }
  SUBCASE("rule: F4 == 1 promoted, everything else untouched") {
    group.items.push_back(item("a", 1, 0, true, 0.5));
    group.items.push_back(item("b", 2, 0, true, 1.0));
    group.items.push_back(item("c", 3, 0, true, 1.0));
    auto o = baseline_orderings(group);
    CHECK(o.rule == std::vector<std::string>{"b", "c", "a"});
  }
}

TEST_CASE("baseline and rule orderings are stable within their blocks") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    RankGroup group;
    group.query_id = "q";
    int n = 2 + (int)rng.below(8);
    for (int i = 0; i < n; ++i)
      group.items.push_back(item("p" + std::to_string(i), i + 1,
                                 (int)rng.below(2), rng.below(2) == 0,
                                 rng.below(2) == 0 ? 1.0 : rng.uniform() * 0.9));
    auto o = baseline_orderings(group);
    auto rank_of = [&](const std::string& id) {
      for (const auto& it : group.items)
        if (it.page_id == id) return it.original_rank;
      return -1;
    };
    auto check_stable = [&](const std::vector<std::string>& ordering,
                            auto in_front) {
      int last_front = 0, last_back = 0;
      for (const auto& id : ordering) {
        if (in_front(id)) {
          CHECK(rank_of(id) > last_front);
          last_front = rank_of(id);
        } else {
          CHECK(rank_of(id) > last_back);
          last_back = rank_of(id);
        }
      }
    };
    check_stable(o.baseline, [&](const std::string& id) {
      for (const auto& it : group.items)
        if (it.page_id == id) return it.has_instructions;
      return false;
    });
    check_stable(o.rule, [&](const std::string& id) {
      for (const auto& it : group.items)
        if (it.page_id == id) return it.features[4] >= 1.0;
      return false;
    });
  }
}

TEST_CASE("significance_test conventions and extremes") {
  std::vector<double> a = {0.5, 0.25, 1.0, 0.0};
  CHECK(significance_test(a, a) == doctest::Approx(1.0));
  CHECK(significance_test({0.4}, {0.2}) == 1.0);  // insufficient pairs

  std::vector<double> big(50), small(50);
  for (int i = 0; i < 50; ++i) {
    small[i] = 0.2;
    big[i] = 1.2;
  }
  CHECK(significance_test(big, small) < 0.01);

  CHECK_THROWS_AS(significance_test({1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("significance_test enumerates exactly for small n") {
  // diffs (1,1,1): sign patterns with |mean| >= 1 are +++ and ---: 2/8.
  std::vector<double> a = {2.0, 2.0, 2.0};
  std::vector<double> b = {1.0, 1.0, 1.0};
  CHECK(significance_test(a, b) == doctest::Approx(0.25));
  // diffs (1,-1): |mean| >= 0 always: p = 1
  CHECK(significance_test({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0));
}

TEST_CASE("evaluate + report rendering") {
  std::vector<RankGroup> groups(2);
  groups[0].query_id = "q1";
  groups[0].items.push_back(item("a", 1, 1, true, 1.0));
  groups[0].items.push_back(item("b", 2, 0, false, 0.0));
  groups[1].query_id = "q2";
  groups[1].items.push_back(item("c", 1, 0, false, 0.0));
  groups[1].items.push_back(item("d", 2, 1, true, 1.0));

  MethodOrderings perfect{"perfect", {{"q1", {"a", "b"}}, {"q2", {"d", "c"}}}};
  MethodOrderings baseline{"baseline", {{"q1", {"a", "b"}}, {"q2", {"c", "d"}}}};
  auto report = evaluate(groups, {perfect, baseline});
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].method == "perfect");
  CHECK(report.rows[0].mrr == doctest::Approx(1.0));
  CHECK(report.rows[1].mrr == doctest::Approx(0.75));
  CHECK(report.per_query.size() == 4);
  CHECK(report.significance.size() == 4);  // perfect vs baseline, 4 metrics

  std::string tsv = render_methods_tsv(report);
  CHECK(tsv.find("method\tMRR\tP@1\tP@5\tNDCG@5\n") == 0);
  CHECK(tsv.find("perfect\t1.0000\t1.0000") != std::string::npos);
  // 4-decimal fixed formatting
  MetricsReport fmt;
  fmt.rows.push_back({"oracle", 0.3353, 0.3353, 0.1365, 0.3353});
  CHECK(render_methods_tsv(fmt).find("0.3353") != std::string::npos);
  // deterministic re-render
  CHECK(render_methods_tsv(report) == render_methods_tsv(report));
  CHECK(render_per_query_jsonl(report) == render_per_query_jsonl(report));
}

TEST_CASE("evaluate rejects missing orderings") {
  std::vector<RankGroup> groups(1);
  groups[0].query_id = "q1";
  groups[0].items.push_back(item("a", 1, 1, true, 1.0));
  MethodOrderings incomplete{"m", {}};
  CHECK_THROWS_AS(evaluate(groups, {incomplete}), Error);
}

TEST_CASE("derive_tasks walks click paths deterministically") {
  auto script =
      simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/settings.json");
  auto tasks = derive_tasks(script, 100);
  CHECK(tasks.size() >= 12);
  for (const auto& t : tasks) {
    CHECK(t.control_path.size() >= 2);
    CHECK(t.control_path.size() <= 4);
    CHECK(t.app_name == "settings");
  }
  auto again = derive_tasks(script, 100);
  REQUIRE(again.size() == tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i)
    CHECK(again[i].phrase == tasks[i].phrase);
}

TEST_CASE("synthetic corpus counts follow the configuration") {
  SynthConfig cfg;
  cfg.apps = {simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/settings.json"),
              simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/shop.json")};
  cfg.tasks_per_app = 2;
  cfg.positives_per_task = 1;
  cfg.swap_positives = 0;
  cfg.failure_negatives = 0;
  cfg.perturb_negatives = 1;
  cfg.cross_negatives = 0;
  cfg.filler_pages = 0;
  cfg.seed = 5;
  auto bundle = generate_synthetic_corpus(cfg);
  CHECK(bundle.queries.size() == 4);  // 2 apps x 2 tasks
  CHECK(bundle.pages.size() == 8);    // 1 positive + 1 perturb each
  size_t positives = 0;
  for (const auto& p : bundle.pages)
    if (p.label.value_or(0) == 1) ++positives;
  CHECK(positives == 4);
  CHECK(bundle.pages.size() - positives == 4);
}

TEST_CASE("same seed reproduces the synthetic corpus byte for byte") {
  SynthConfig cfg;
  cfg.apps = {simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/maps.json")};
  cfg.tasks_per_app = 3;
  cfg.seed = 99;
  auto a = generate_synthetic_corpus(cfg);
  auto b = generate_synthetic_corpus(cfg);
  CHECK(corpus::corpus_to_string(a) == corpus::corpus_to_string(b));
  cfg.seed = 100;
  auto c = generate_synthetic_corpus(cfg);
  CHECK(corpus::corpus_to_string(a) != corpus::corpus_to_string(c));
}

TEST_CASE("perturbed pages score strictly below their source positive on F4") {
  SynthConfig cfg;
  cfg.apps = {simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/settings.json"),
              simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/messenger.json")};
  cfg.tasks_per_app = 4;
  cfg.positives_per_task = 1;
  cfg.swap_positives = 0;
  cfg.failure_negatives = 0;
  cfg.perturb_negatives = 2;
  cfg.cross_negatives = 0;
  cfg.filler_pages = 0;
  cfg.seed = 21;
  auto out = generate_synthetic_dataset(cfg);
  CHECK(out.positives == 8);
  CHECK(out.negatives == 16);
  size_t checked = 0;
  for (const auto& group : out.groups) {
    double positive_f4 = -1.0;
    for (const auto& it : group.items)
      if (it.label.value_or(0) == 1) positive_f4 = it.features[4];
    REQUIRE(positive_f4 == doctest::Approx(1.0));
    for (const auto& it : group.items) {
      if (it.label.value_or(0) == 0) {
        CHECK(it.features[4] < positive_f4);
        ++checked;
      }
    }
  }
  CHECK(checked == 16);
}

TEST_CASE("splits are seeded, disjoint and near 80/10/10") {
  SynthConfig cfg;
  cfg.apps = {simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/settings.json"),
              simenv::load_app_script(HOWTO_FIXTURES_DIR "/apps/shop.json")};
  cfg.tasks_per_app = 10;
  cfg.seed = 1;
  auto bundle = generate_synthetic_corpus(cfg);
  auto split = split_queries(bundle, 7);
  auto split2 = split_queries(bundle, 7);
  CHECK(split.train == split2.train);
  CHECK(split.val == split2.val);
  CHECK(split.test == split2.test);

  size_t n = bundle.queries.size();
  CHECK(split.val.size() == n / 10);
  CHECK(split.test.size() == n / 10);
  CHECK(split.train.size() == n - 2 * (n / 10));

  std::set<std::string> all;
  for (const auto& q : split.train) all.insert(q);
  for (const auto& q : split.val) all.insert(q);
  for (const auto& q : split.test) all.insert(q);
  CHECK(all.size() == n);  // no query in two splits

  auto round = split_from_json(split_to_json(split));
  CHECK(round.train == split.train);
  CHECK(round.test == split.test);
}

TEST_CASE("emit_report writes the three files") {
  MetricsReport report;
  report.rows.push_back({"baseline", 0.5, 0.5, 0.2, 0.5});
  report.rows.push_back({"oracle", 1.0, 1.0, 0.4, 1.0});
  report.per_query.push_back({"q1", "baseline", 0.5, 0.5, 0.2, 0.5});
  auto dir = std::filesystem::temp_directory_path() / "howto-eval-report";
  std::filesystem::remove_all(dir);
  emit_report(report, dir);
  CHECK(std::filesystem::exists(dir / "report.tsv"));
  CHECK(std::filesystem::exists(dir / "report_queries.jsonl"));
  CHECK(std::filesystem::exists(dir / "report_significance.tsv"));
  std::string first = read_file(dir / "report.tsv");
  emit_report(report, dir);
  CHECK(read_file(dir / "report.tsv") == first);  // byte-identical rewrite
}
