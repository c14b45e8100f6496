// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "howto/util.hpp"

namespace howto::eval {

double reciprocal_rank(const std::vector<int>& ranked_labels) {
  for (size_t i = 0; i < ranked_labels.size(); ++i)
    if (ranked_labels[i] > 0) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

double mrr(const std::vector<std::vector<int>>& per_query_ranked_labels) {
  if (per_query_ranked_labels.empty()) throw Error("mrr: no queries");
  double acc = 0.0;
  for (const auto& q : per_query_ranked_labels) acc += reciprocal_rank(q);
  return acc / static_cast<double>(per_query_ranked_labels.size());
}

double precision_at_k(const std::vector<int>& ranked_labels, int k) {
  if (k < 1) throw Error("precision_at_k: k must be >= 1");
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranked_labels.size()); ++i)
    if (ranked_labels[i] > 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(const std::vector<int>& ranked_labels, int k) {
  if (k < 1) throw Error("ndcg_at_k: k must be >= 1");
  auto dcg = [&](const std::vector<int>& labels) {
    double acc = 0.0;
    for (int i = 0; i < k && i < static_cast<int>(labels.size()); ++i)
      acc += (std::pow(2.0, labels[i]) - 1.0) /
             std::log2(static_cast<double>(i) + 2.0);
    return acc;
  };
  std::vector<int> ideal = ranked_labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double norm = dcg(ideal);
  if (norm <= 0.0) return 0.0;
  return dcg(ranked_labels) / norm;
}

double significance_test(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b, int resamples,
                         uint64_t seed) {
  if (scores_a.size() != scores_b.size())
    throw Error("significance_test: paired inputs must have equal length");
  size_t n = scores_a.size();
  if (n < 2) return 1.0;

  std::vector<double> diff(n);
  for (size_t i = 0; i < n; ++i) diff[i] = scores_a[i] - scores_b[i];
  double observed = 0.0;
  for (double d : diff) observed += d;
  observed = std::fabs(observed / static_cast<double>(n));
  // Tolerance keeps ties (same |mean|) counted as at-least-as-extreme.
  const double tie_eps = 1e-12;

  // Exhaustive when feasible, sampled otherwise; both deterministic.
  if (n <= 62 && (1ULL << n) <= static_cast<uint64_t>(resamples)) {
    uint64_t total = 1ULL << n;
    uint64_t extreme = 0;
    for (uint64_t mask = 0; mask < total; ++mask) {
      double mean = 0.0;
      for (size_t i = 0; i < n; ++i)
        mean += (mask >> i) & 1 ? -diff[i] : diff[i];
      mean = std::fabs(mean / static_cast<double>(n));
      if (mean >= observed - tie_eps) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
  }

  Rng rng(seed);
  int extreme = 0;
  for (int r = 0; r < resamples; ++r) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
      bool flip = (rng.next_u64() & 1) != 0;
      mean += flip ? -diff[i] : diff[i];
    }
    mean = std::fabs(mean / static_cast<double>(n));
    if (mean >= observed - tie_eps) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(resamples + 1);
}

}  // namespace howto::eval
