// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace howto {

/// Thrown for unrecoverable errors: bad files, schema violations, broken
/// contracts. Domain-level outcomes (a rejected action, an ungrounded step)
/// are encoded in result types instead.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Tokenization. One rule everywhere: case-fold, split on non-alphanumeric,
// drop stopwords. rouge_l keeps its own tokenizer (no stopword removal).
// ---------------------------------------------------------------------------

/// The shipped stopword list (127 entries, lowercase, unique).
const std::unordered_set<std::string>& stopwords();

/// Case-folded, alphanumeric-run tokens; no stopword filtering.
std::vector<std::string> split_tokens(std::string_view text);

/// split_tokens + stopword removal. The project-wide tokenizer.
std::vector<std::string> tokenize(std::string_view text);

std::unordered_set<std::string> token_set(std::string_view text);

/// |A intersect B| / min(|A|, |B|) over stopword-filtered token sets; 0 when either
/// side is empty. Used for control-label vs. instruction matching.
double token_overlap(std::string_view a, std::string_view b);

std::string lower_ascii(std::string_view s);
std::string trim(std::string_view s);

// ---------------------------------------------------------------------------
// Deterministic RNG. Counter-based splitmix64 so every stochastic component
// can be replayed from (seed, stream-tag) alone.
// ---------------------------------------------------------------------------

uint64_t mix64(uint64_t x);

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix64(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n-1]; n must be > 0.
  uint64_t below(uint64_t n);
  /// Uniform in [lo, hi).
  double range(double lo, double hi);

  /// Independent stream derived from this one's seed and a tag.
  Rng fork(uint64_t tag) const;
  Rng fork(std::string_view tag) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

uint64_t fnv1a64(std::string_view s);

// ---------------------------------------------------------------------------
// Small file helpers.
// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace howto
