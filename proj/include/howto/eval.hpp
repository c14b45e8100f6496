// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "howto/metrics.hpp"
#include "howto/rerank.hpp"

namespace howto::eval {

/// Reference orderings computed directly from the group (no trained model).
struct BaselineOrderings {
  std::optional<std::vector<std::string>> oracle;  // needs labels
  std::vector<std::string> baseline;   // instruction pages first
  std::vector<std::string> f4_based;   // instruction pages by F4
  std::vector<std::string> rule;       // F4 == 1 promoted
};

BaselineOrderings baseline_orderings(const rerank::RankGroup& group);

struct MethodRow {
  std::string method;
  double mrr = 0.0, p1 = 0.0, p5 = 0.0, ndcg5 = 0.0;
};

struct QueryRow {
  std::string query_id;
  std::string method;
  double rr = 0.0, p1 = 0.0, p5 = 0.0, ndcg5 = 0.0;
};

struct SignificanceRow {
  std::string method_a, method_b, metric;
  double p_value = 1.0;
};

struct MetricsReport {
  std::vector<MethodRow> rows;
  std::vector<QueryRow> per_query;
  std::vector<SignificanceRow> significance;
  std::vector<std::string> warnings;
};

struct MethodOrderings {
  std::string method;
  std::map<std::string, std::vector<std::string>> per_query;  // query -> pages
};

/// Computes the four metrics per method, per-query breakdowns, and paired
/// permutation p-values of every method against "baseline".
MetricsReport evaluate(const std::vector<rerank::RankGroup>& groups,
                       const std::vector<MethodOrderings>& methods,
                       int resamples = 10000, uint64_t seed = 7);

std::string render_methods_tsv(const MetricsReport& report);
std::string render_significance_tsv(const MetricsReport& report);
std::string render_per_query_jsonl(const MetricsReport& report);

/// Writes report.tsv, report_queries.jsonl and report_significance.tsv.
void emit_report(const MetricsReport& report,
                 const std::filesystem::path& directory);

}  // namespace howto::eval
