// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/extract.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "howto/util.hpp"

namespace howto::extract {

namespace {

// Dropped wholesale during cleaning. textarea is raw-text and would not
// survive an escape/re-parse round trip, so it goes too.
const std::unordered_set<std::string>& stripped_tags() {
  static const std::unordered_set<std::string> tags = {
      "script", "style",  "noscript", "template", "iframe",
      "svg",    "object", "embed",    "textarea"};
  return tags;
}

bool whitespace_only(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

void serialize_clean(const html::Node& node, std::string& out) {
  if (node.kind == html::Node::Kind::text) {
    if (!whitespace_only(node.text))
      out += html::escape_text(html::normalize_ws(node.text));
    return;
  }
  if (node.is_element("head") || stripped_tags().count(node.tag)) return;
  out += "<" + node.tag + ">";
  bool first = true;
  for (const auto& child : node.children) {
    // Keep one space between adjacent text runs so words do not fuse.
    if (child.kind == html::Node::Kind::text && !first &&
        !out.empty() && out.back() != '>' && !whitespace_only(child.text)) {
      out += " ";
    }
    serialize_clean(child, out);
    first = false;
  }
  if (!html::is_void_tag(node.tag)) out += "</" + node.tag + ">";
}

// Text belonging to a block element: direct text plus inline descendants,
// stopping at nested block elements (they produce their own snippets).
void own_text(const html::Node& node, std::string& out) {
  for (const auto& child : node.children) {
    if (child.kind == html::Node::Kind::text) {
      out += child.text;
      out += " ";
    } else if (html::is_inline_tag(child.tag)) {
      own_text(child, out);
    }
  }
}

void walk_snippets(const html::Node& node, const std::string& path,
                   std::vector<Snippet>& out) {
  if (node.kind != html::Node::Kind::element) return;
  if (!html::is_inline_tag(node.tag)) {
    std::string text;
    own_text(node, text);
    // Inline children's text is also gathered here; descend only into the
    // non-inline children for further snippets.
    std::string normalized = html::normalize_ws(text);
    if (!normalized.empty()) {
      Snippet s;
      s.index = static_cast<int>(out.size());
      s.text = normalized;
      s.xpath = path;
      out.push_back(std::move(s));
    }
  }
  // Positional index per tag name, emitted only when needed.
  std::unordered_map<std::string, int> tag_total;
  for (const auto& child : node.children)
    if (child.kind == html::Node::Kind::element) ++tag_total[child.tag];
  std::unordered_map<std::string, int> tag_seen;
  for (const auto& child : node.children) {
    if (child.kind != html::Node::Kind::element) continue;
    int ordinal = ++tag_seen[child.tag];
    std::string seg = child.tag;
    if (tag_total[child.tag] > 1) seg += "[" + std::to_string(ordinal) + "]";
    walk_snippets(child, path + "/" + seg, out);
  }
}

std::string strip_positional(const std::string& segment) {
  size_t bracket = segment.find('[');
  return bracket == std::string::npos ? segment : segment.substr(0, bracket);
}

std::vector<std::string> split_path(const std::string& xpath) {
  std::vector<std::string> segments;
  std::string current;
  for (char c : xpath) {
    if (c == '/') {
      if (!current.empty()) segments.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) segments.push_back(std::move(current));
  return segments;
}

bool looks_numbered(const std::string& text) {
  std::string t = lower_ascii(trim(text));
  size_t i = 0;
  if (t.rfind("step", 0) == 0) {
    i = 4;
    while (i < t.size() && t[i] == ' ') ++i;
  }
  size_t digits = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
    ++i;
    ++digits;
  }
  if (digits == 0) return false;
  return i < t.size() && (t[i] == '.' || t[i] == ')' || t[i] == ':');
}

}  // namespace

const char* to_string(GroundingStatus s) {
  switch (s) {
    case GroundingStatus::full: return "full";
    case GroundingStatus::partial: return "partial";
    case GroundingStatus::none: return "none";
  }
  return "none";
}

GroundingStatus grounding_status_from_string(const std::string& s) {
  if (s == "full") return GroundingStatus::full;
  if (s == "partial") return GroundingStatus::partial;
  if (s == "none") return GroundingStatus::none;
  throw Error("unknown grounding status: " + s);
}

CleanedHtml clean_html(const std::string& raw_html,
                       const std::string& source_page_id) {
  html::Node doc = html::parse_document(raw_html);
  std::string out;
  serialize_clean(doc, out);
  return CleanedHtml{std::move(out), source_page_id};
}

std::vector<Snippet> index_snippets(const CleanedHtml& doc) {
  if (trim(doc.text).empty()) return {};
  html::Node root = html::parse_document(doc.text);
  std::vector<Snippet> out;
  walk_snippets(root, "/html", out);
  return out;
}

std::vector<std::string> ListGenerator::generate(const GeneratorInput& input) {
  auto anchor = token_set(input.query_text + " " + input.app_name);
  auto anchored = [&](const std::string& text) {
    for (const auto& tok : tokenize(text))
      if (anchor.count(tok)) return true;
    return false;
  };
  std::vector<std::string> steps;
  if (trim(input.cleaned_html).empty()) return steps;
  CleanedHtml doc{input.cleaned_html, ""};
  auto snippets = index_snippets(doc);

  // The anchor test applies to a whole list: a step list is usually only
  // identifiable from its combined text ("Tap Sound" alone names neither
  // the query nor the app).
  std::unordered_map<std::string, std::string> list_text;
  auto list_of = [&](const Snippet& s) -> std::optional<std::string> {
    auto segments = split_path(s.xpath);
    if (segments.empty() || strip_positional(segments.back()) != "li")
      return std::nullopt;
    std::string parent;
    for (size_t i = 0; i + 1 < segments.size(); ++i) parent += "/" + segments[i];
    return parent;
  };
  for (const auto& s : snippets) {
    if (auto key = list_of(s)) list_text[*key] += s.text + " ";
  }

  for (const auto& s : snippets) {
    if (auto key = list_of(s)) {
      if (anchored(list_text[*key])) steps.push_back(s.text);
    } else if (looks_numbered(s.text) && anchored(s.text)) {
      steps.push_back(s.text);
    }
  }
  return steps;
}

ExtractionResult generate_instructions(const QueryContext& query,
                                       const std::string& title,
                                       const CleanedHtml& doc,
                                       GeneratorInterface& generator) {
  GeneratorInput input{query.query_text, query.app_name, title, doc.text};
  ExtractionResult result;
  result.generator_id = generator.id();
  for (auto& step : generator.generate(input)) {
    std::string trimmed = trim(step);
    if (!trimmed.empty()) result.steps.push_back(std::move(trimmed));
  }
  return result;
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  auto c = split_tokens(candidate);
  auto r = split_tokens(reference);
  if (c.empty() || r.empty()) return 0.0;
  // Classic LCS DP, rows rolled.
  std::vector<size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (size_t i = 1; i <= c.size(); ++i) {
    for (size_t j = 1; j <= r.size(); ++j) {
      if (c[i - 1] == r[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  size_t lcs = prev[r.size()];
  if (lcs == 0) return 0.0;
  double precision = static_cast<double>(lcs) / static_cast<double>(c.size());
  double recall = static_cast<double>(lcs) / static_cast<double>(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::array<double, kEmbedDim> HashedBagEmbedder::embed(
    const std::string& text) {
  std::array<double, kEmbedDim> v{};
  for (const auto& tok : tokenize(text))
    v[fnv1a64(tok) % kEmbedDim] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::shared_ptr<EmbedderInterface> default_embedder() {
  return std::make_shared<HashedBagEmbedder>();
}

std::shared_ptr<GeneratorInterface> default_generator() {
  return std::make_shared<ListGenerator>();
}

std::array<double, kEmbedDim> embed(const std::string& text,
                                    EmbedderInterface& embedder) {
  return embedder.embed(text);
}

double embed_distance(const std::array<double, kEmbedDim>& a,
                      const std::array<double, kEmbedDim>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < kEmbedDim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot;
}

bool similar_xpath(const std::string& a, const std::string& b) {
  auto sa = split_path(a);
  auto sb = split_path(b);
  if (sa.size() != sb.size()) return false;
  size_t n = sa.size();
  for (size_t i = 0; i < n; ++i) {
    bool trailing = i + 2 >= n;
    if (trailing) {
      if (strip_positional(sa[i]) != strip_positional(sb[i])) return false;
    } else {
      if (sa[i] != sb[i]) return false;
    }
  }
  return true;
}

GroundedInstructions ground_instructions(const ExtractionResult& result,
                                         const std::vector<Snippet>& snippets,
                                         EmbedderInterface& embedder,
                                         const GroundingConfig& config) {
  GroundedInstructions out;
  if (result.steps.empty()) return out;

  std::vector<std::array<double, kEmbedDim>> snippet_vecs;
  snippet_vecs.reserve(snippets.size());
  for (const auto& s : snippets) snippet_vecs.push_back(embedder.embed(s.text));

  int prev_index = -1;
  std::string prev_xpath;
  for (const auto& step : result.steps) {
    auto step_vec = embedder.embed(step);
    const Snippet* best = nullptr;
    double best_rouge = -1.0, best_dist = 2.0;
    for (size_t i = 0; i < snippets.size(); ++i) {
      const Snippet& sn = snippets[i];
      if (prev_index >= 0) {
        if (sn.index <= prev_index) continue;
        if (!similar_xpath(sn.xpath, prev_xpath)) continue;
      }
      double r = rouge_l(step, sn.text);
      double d = embed_distance(step_vec, snippet_vecs[i]);
      if (!(r > config.rouge_min || d < config.embed_dist_max)) continue;
      // Closest candidate: highest rouge, then smallest distance, then
      // earliest position.
      if (r > best_rouge || (r == best_rouge && d < best_dist)) {
        best = &sn;
        best_rouge = r;
        best_dist = d;
      }
    }
    if (best != nullptr) {
      out.steps.push_back({step, best->index, best->xpath, best_rouge,
                           best_dist});
      prev_index = best->index;
      prev_xpath = best->xpath;
    }
  }

  if (out.steps.empty())
    out.status = GroundingStatus::none;
  else if (out.steps.size() == result.steps.size())
    out.status = GroundingStatus::full;
  else
    out.status = GroundingStatus::partial;
  return out;
}

}  // namespace howto::extract
