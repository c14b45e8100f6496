// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/util.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace howto {

namespace {

// 127 entries. Deliberately excludes imperative/UI vocabulary (tap, open,
// enter, up, down, ...) that carries meaning in instructions and control
// labels.
const char* kStopwords[] = {
    "a",       "an",      "and",     "the",     "or",        "but",
    "if",      "then",    "else",    "when",    "while",     "as",
    "at",      "by",      "for",     "from",    "in",        "into",
    "of",      "off",     "on",      "onto",    "out",       "over",
    "under",   "to",      "with",    "without", "about",     "above",
    "after",   "again",   "against", "before",  "below",     "between",
    "during",  "through", "until",   "upon",    "i",         "me",
    "my",      "mine",    "myself",  "we",      "us",        "our",
    "ours",    "ourselves", "you",   "your",    "yours",     "yourself",
    "he",      "him",     "his",     "himself", "she",       "her",
    "hers",    "herself", "it",      "its",     "itself",    "they",
    "them",    "their",   "theirs",  "themselves", "this",   "that",
    "these",   "those",   "what",    "which",   "who",       "whom",
    "whose",   "whoever", "am",      "is",      "are",       "was",
    "were",    "be",      "been",    "being",   "have",      "has",
    "had",     "having",  "do",      "does",    "did",       "doing",
    "will",    "would",   "shall",   "should",  "can",       "could",
    "may",     "might",   "must",    "ought",   "how",       "why",
    "where",   "there",   "here",    "not",     "no",        "nor",
    "only",    "own",     "same",    "so",      "some",      "such",
    "than",    "too",     "very",    "just",    "also",      "any",
    "each",
};

}  // namespace

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> set(std::begin(kStopwords),
                                                   std::end(kStopwords));
  return set;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens = split_tokens(text);
  std::erase_if(tokens,
                [](const std::string& t) { return stopwords().count(t) > 0; });
  return tokens;
}

std::unordered_set<std::string> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return std::unordered_set<std::string>(tokens.begin(), tokens.end());
}

double token_overlap(std::string_view a, std::string_view b) {
  auto sa = token_set(a);
  auto sb = token_set(b);
  if (sa.empty() || sb.empty()) return 0.0;
  size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) /
         static_cast<double>(std::min(sa.size(), sb.size()));
}

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double Rng::uniform() {
  // 53 mantissa bits.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw Error("Rng::below: n must be positive");
  return next_u64() % n;
}

double Rng::range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

Rng Rng::fork(uint64_t tag) const {
  Rng child(0);
  child.state_ = mix64(state_ ^ mix64(tag));
  return child;
}

Rng Rng::fork(std::string_view tag) const { return fork(fnv1a64(tag)); }

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace howto
