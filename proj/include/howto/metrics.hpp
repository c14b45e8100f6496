// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace howto::eval {

/// All metric inputs are binary labels listed in ranked order (best first).
/// Missing labels must be mapped to 0 by the caller.

/// 1 / rank of the first positive; 0 when there is none.
double reciprocal_rank(const std::vector<int>& ranked_labels);

/// Mean reciprocal rank over queries; throws on empty input.
double mrr(const std::vector<std::vector<int>>& per_query_ranked_labels);

/// Positives within the top k divided by k. k is a fixed denominator:
/// shorter lists pad as non-relevant.
double precision_at_k(const std::vector<int>& ranked_labels, int k);

/// DCG@k with gain 2^y - 1 and discount 1/log2(j+1), divided by the ideal
/// DCG@k; 0 for all-negative queries.
double ndcg_at_k(const std::vector<int>& ranked_labels, int k);

/// Two-sided paired permutation (sign-flip) test on the mean difference.
/// Enumerates all 2^n patterns when that is no more than resamples,
/// otherwise draws `resamples` seeded sign patterns. n < 2 -> 1.0.
double significance_test(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b,
                         int resamples = 10000, uint64_t seed = 7);

}  // namespace howto::eval
