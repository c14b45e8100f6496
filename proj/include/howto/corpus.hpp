// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace howto::corpus {

/// One "How-to" search query.
struct QueryRecord {
  std::string query_id;
  std::string text;
  std::string app_domain;
  std::string app_name;

  bool operator==(const QueryRecord&) const = default;
};

/// One search result page for a query. label, when present, is the human
/// relevance judgement (1 = instructions on this page complete the task).
struct PageRecord {
  std::string page_id;
  std::string query_id;
  std::string url;
  int original_rank = 1;
  std::string title;
  std::string raw_html;
  std::optional<int> label;

  bool operator==(const PageRecord&) const = default;
};

struct CorpusBundle {
  std::vector<QueryRecord> queries;
  std::vector<PageRecord> pages;
  std::map<std::string, std::string> metadata;

  bool operator==(const CorpusBundle&) const = default;

  const QueryRecord* find_query(const std::string& query_id) const;
  std::vector<const PageRecord*> pages_of(const std::string& query_id) const;
};

struct QueryDiagnostics {
  std::string query_id;
  size_t page_count = 0;
  size_t labeled_count = 0;
  std::vector<int> missing_ranks;  // gaps in 1..max(original_rank)
};

struct ValidationReport {
  size_t query_count = 0;
  size_t page_count = 0;
  double label_coverage = 0.0;  // labeled pages / pages, 0 when empty
  std::vector<QueryDiagnostics> per_query;
  std::vector<std::string> warnings;
};

/// Loads the line-delimited corpus format. Strict: malformed records,
/// duplicate ids, dangling query references and duplicate per-query ranks
/// all throw with the offending line or identifier named.
CorpusBundle load_corpus(const std::filesystem::path& path);

/// Diagnostics only; never throws on content.
ValidationReport validate_corpus(const CorpusBundle& bundle);

/// Writes the bundle so that load_corpus(save_corpus(b)) == b.
void save_corpus(const CorpusBundle& bundle, const std::filesystem::path& path);

/// Serialization used by save_corpus, exposed for byte-level tests.
std::string corpus_to_string(const CorpusBundle& bundle);
CorpusBundle corpus_from_string(const std::string& text,
                                const std::string& origin = "<memory>");

}  // namespace howto::corpus
