// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "howto/util.hpp"
#include "json.hpp"

namespace howto::corpus {

using nlohmann::json;

const QueryRecord* CorpusBundle::find_query(const std::string& query_id) const {
  for (const auto& q : queries)
    if (q.query_id == query_id) return &q;
  return nullptr;
}

std::vector<const PageRecord*> CorpusBundle::pages_of(
    const std::string& query_id) const {
  std::vector<const PageRecord*> out;
  for (const auto& p : pages)
    if (p.query_id == query_id) out.push_back(&p);
  return out;
}

namespace {

std::string require_string(const json& j, const char* key, size_t line_no) {
  if (!j.contains(key) || !j[key].is_string())
    throw Error("corpus line " + std::to_string(line_no) +
                ": missing or non-string field \"" + key + "\"");
  return j[key].get<std::string>();
}

void check_bundle(const CorpusBundle& bundle, const std::string& origin) {
  std::unordered_set<std::string> query_ids;
  for (const auto& q : bundle.queries) {
    if (q.text.empty())
      throw Error(origin + ": query " + q.query_id + " has empty text");
    if (!query_ids.insert(q.query_id).second)
      throw Error(origin + ": duplicate query_id \"" + q.query_id + "\"");
  }
  std::unordered_set<std::string> page_ids;
  std::unordered_map<std::string, std::set<int>> ranks_per_query;
  for (const auto& p : bundle.pages) {
    if (!page_ids.insert(p.page_id).second)
      throw Error(origin + ": duplicate page_id \"" + p.page_id + "\"");
    if (!query_ids.count(p.query_id))
      throw Error(origin + ": page " + p.page_id +
                  " references unknown query \"" + p.query_id + "\"");
    if (p.original_rank < 1)
      throw Error(origin + ": page " + p.page_id + " has original_rank < 1");
    if (!ranks_per_query[p.query_id].insert(p.original_rank).second)
      throw Error(origin + ": duplicate original_rank " +
                  std::to_string(p.original_rank) + " within query \"" +
                  p.query_id + "\" (page " + p.page_id + ")");
    if (p.label && *p.label != 0 && *p.label != 1)
      throw Error(origin + ": page " + p.page_id + " label must be 0 or 1");
  }
  for (const auto& q : bundle.queries) {
    if (!ranks_per_query.count(q.query_id))
      throw Error(origin + ": query " + q.query_id + " has no pages");
  }
}

}  // namespace

CorpusBundle corpus_from_string(const std::string& text,
                                const std::string& origin) {
  CorpusBundle bundle;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw Error(origin + ": corpus line " + std::to_string(line_no) +
                  ": not valid JSON");
    std::string kind = require_string(j, "kind", line_no);
    if (kind == "query") {
      QueryRecord q;
      q.query_id = require_string(j, "query_id", line_no);
      q.text = require_string(j, "text", line_no);
      q.app_domain = require_string(j, "app_domain", line_no);
      q.app_name = require_string(j, "app_name", line_no);
      bundle.queries.push_back(std::move(q));
    } else if (kind == "page") {
      PageRecord p;
      p.page_id = require_string(j, "page_id", line_no);
      p.query_id = require_string(j, "query_id", line_no);
      p.url = require_string(j, "url", line_no);
      if (!j.contains("original_rank") ||
          !j["original_rank"].is_number_integer())
        throw Error(origin + ": corpus line " + std::to_string(line_no) +
                    ": missing or non-integer original_rank");
      p.original_rank = j["original_rank"].get<int>();
      p.title = require_string(j, "title", line_no);
      p.raw_html = require_string(j, "raw_html", line_no);
      if (j.contains("label") && !j["label"].is_null()) {
        if (!j["label"].is_number_integer())
          throw Error(origin + ": corpus line " + std::to_string(line_no) +
                      ": label must be an integer");
        p.label = j["label"].get<int>();
      }
      bundle.pages.push_back(std::move(p));
    } else if (kind == "meta") {
      for (auto& [key, value] : j.items()) {
        if (key == "kind") continue;
        if (!value.is_string())
          throw Error(origin + ": corpus line " + std::to_string(line_no) +
                      ": meta values must be strings");
        bundle.metadata[key] = value.get<std::string>();
      }
    } else {
      throw Error(origin + ": corpus line " + std::to_string(line_no) +
                  ": unknown record kind \"" + kind + "\"");
    }
  }
  check_bundle(bundle, origin);
  return bundle;
}

CorpusBundle load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error("corpus file not found: " + path.string());
  return corpus_from_string(read_file(path), path.string());
}

std::string corpus_to_string(const CorpusBundle& bundle) {
  std::string out;
  if (!bundle.metadata.empty()) {
    json m;
    m["kind"] = "meta";
    for (const auto& [k, v] : bundle.metadata) m[k] = v;
    out += m.dump();
    out += '\n';
  }
  for (const auto& q : bundle.queries) {
    json j;
    j["kind"] = "query";
    j["query_id"] = q.query_id;
    j["text"] = q.text;
    j["app_domain"] = q.app_domain;
    j["app_name"] = q.app_name;
    out += j.dump();
    out += '\n';
  }
  for (const auto& p : bundle.pages) {
    json j;
    j["kind"] = "page";
    j["page_id"] = p.page_id;
    j["query_id"] = p.query_id;
    j["url"] = p.url;
    j["original_rank"] = p.original_rank;
    j["title"] = p.title;
    j["raw_html"] = p.raw_html;
    if (p.label) j["label"] = *p.label;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const CorpusBundle& bundle,
                 const std::filesystem::path& path) {
  check_bundle(bundle, "save_corpus");
  write_file(path, corpus_to_string(bundle));
}

ValidationReport validate_corpus(const CorpusBundle& bundle) {
  ValidationReport report;
  report.query_count = bundle.queries.size();
  report.page_count = bundle.pages.size();
  if (bundle.queries.empty()) report.warnings.push_back("no queries");

  size_t labeled = 0;
  for (const auto& q : bundle.queries) {
    QueryDiagnostics d;
    d.query_id = q.query_id;
    std::set<int> ranks;
    for (const auto& p : bundle.pages) {
      if (p.query_id != q.query_id) continue;
      ++d.page_count;
      if (p.label) ++d.labeled_count;
      ranks.insert(p.original_rank);
    }
    labeled += d.labeled_count;
    if (!ranks.empty()) {
      for (int r = 1; r < *ranks.rbegin(); ++r) {
        if (!ranks.count(r)) d.missing_ranks.push_back(r);
      }
    }
    if (!d.missing_ranks.empty()) {
      std::string w = "query " + q.query_id + " has rank gaps:";
      for (int r : d.missing_ranks) w += " " + std::to_string(r);
      report.warnings.push_back(w);
    }
    report.per_query.push_back(std::move(d));
  }
  report.label_coverage =
      bundle.pages.empty()
          ? 0.0
          : static_cast<double>(labeled) / static_cast<double>(report.page_count);
  return report;
}

}  // namespace howto::corpus
