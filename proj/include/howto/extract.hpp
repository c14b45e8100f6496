// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "howto/html.hpp"

namespace howto::extract {

/// Sanitized HTML: scripts, styles, head metadata, comments and attributes
/// removed; element hierarchy of the body content preserved.
struct CleanedHtml {
  std::string text;
  std::string source_page_id;
};

/// A text-bearing element of the cleaned document, in document order.
struct Snippet {
  int index = 0;
  std::string text;
  std::string xpath;
};

struct ExtractionResult {
  std::vector<std::string> steps;  // empty encodes the "none" outcome
  std::string generator_id;
};

struct GroundedStep {
  std::string text;
  int snippet_index = -1;
  std::string xpath;
  double rouge = 0.0;
  double embed_distance = 1.0;
};

enum class GroundingStatus { full, partial, none };

struct GroundedInstructions {
  std::vector<GroundedStep> steps;
  GroundingStatus status = GroundingStatus::none;
};

const char* to_string(GroundingStatus s);
GroundingStatus grounding_status_from_string(const std::string& s);

/// A match is accepted when rouge_l > rouge_min OR embedding distance
/// (1 - cosine) < embed_dist_max.
struct GroundingConfig {
  double rouge_min = 0.7;
  double embed_dist_max = 0.25;
};

struct GeneratorInput {
  std::string query_text;
  std::string app_name;
  std::string page_title;
  std::string cleaned_html;
};

/// Produces candidate instruction steps for a page. Implementations must be
/// deterministic given identical inputs or report deterministic() == false,
/// which disables any cache reuse by callers.
class GeneratorInterface {
 public:
  virtual ~GeneratorInterface() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> generate(const GeneratorInput& input) = 0;
  virtual bool deterministic() const { return true; }
  virtual bool concurrent_safe() const { return true; }
};

/// Rule-based extractor: keeps list items and numbered paragraphs that share
/// at least one non-stopword token with the query or the app name.
class ListGenerator : public GeneratorInterface {
 public:
  std::string id() const override { return "builtin-list"; }
  std::vector<std::string> generate(const GeneratorInput& input) override;
};

inline constexpr int kEmbedDim = 256;

/// Fixed-dimension text embedding. The default is a hashed bag of tokens.
class EmbedderInterface {
 public:
  virtual ~EmbedderInterface() = default;
  virtual std::string id() const = 0;
  virtual std::array<double, kEmbedDim> embed(const std::string& text) = 0;
};

class HashedBagEmbedder : public EmbedderInterface {
 public:
  std::string id() const override { return "hashed-bag-256"; }
  std::array<double, kEmbedDim> embed(const std::string& text) override;
};

std::shared_ptr<EmbedderInterface> default_embedder();
std::shared_ptr<GeneratorInterface> default_generator();

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

CleanedHtml clean_html(const std::string& raw_html,
                       const std::string& source_page_id = "");

std::vector<Snippet> index_snippets(const CleanedHtml& doc);

struct QueryContext {
  std::string query_text;
  std::string app_name;
};

ExtractionResult generate_instructions(const QueryContext& query,
                                       const std::string& title,
                                       const CleanedHtml& doc,
                                       GeneratorInterface& generator);

/// ROUGE-L F-measure over case-folded alphanumeric tokens (stopwords kept).
/// Both inputs empty -> 0.
double rouge_l(const std::string& candidate, const std::string& reference);

/// Unit L2 vector (all-zero for token-free text).
std::array<double, kEmbedDim> embed(const std::string& text,
                                    EmbedderInterface& embedder);

double embed_distance(const std::array<double, kEmbedDim>& a,
                      const std::array<double, kEmbedDim>& b);

/// True when the paths are equal after stripping positional indices from the
/// last two segments. Sibling list entries (li[2] vs li[5]) are similar;
/// different subtrees are not.
bool similar_xpath(const std::string& a, const std::string& b);

/// Sequential grounding: step 1 may match any snippet; later steps only
/// snippets with an XPath similar to the previous match and a strictly
/// larger snippet index. Unmatched steps are dropped.
GroundedInstructions ground_instructions(const ExtractionResult& result,
                                         const std::vector<Snippet>& snippets,
                                         EmbedderInterface& embedder,
                                         const GroundingConfig& config = {});

}  // namespace howto::extract
