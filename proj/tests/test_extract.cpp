// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "howto/extract.hpp"
#include "howto/util.hpp"

using namespace howto;
using extract::CleanedHtml;
using extract::ExtractionResult;
using extract::GroundedInstructions;
using extract::GroundingStatus;
using extract::Snippet;

namespace {

std::vector<Snippet> snippets_of(const std::string& html) {
  return extract::index_snippets(extract::clean_html(html));
}

/// Independent restatement of the grounding rule, by enumeration: per step,
/// collect every threshold-passing candidate honoring the order/xpath
/// chain, then pick by (rouge desc, distance asc, index asc).
GroundedInstructions grounding_oracle(const ExtractionResult& result,
                                      const std::vector<Snippet>& snippets,
                                      extract::EmbedderInterface& embedder,
                                      const extract::GroundingConfig& cfg) {
  GroundedInstructions out;
  int prev = -1;
  std::string prev_xpath;
  for (const auto& step : result.steps) {
    struct Cand {
      double rouge, dist;
      const Snippet* snippet;
    };
    std::vector<Cand> cands;
    for (const auto& sn : snippets) {
      if (prev >= 0 &&
          (sn.index <= prev || !extract::similar_xpath(sn.xpath, prev_xpath)))
        continue;
      double r = extract::rouge_l(step, sn.text);
      double d = extract::embed_distance(embedder.embed(step),
                                         embedder.embed(sn.text));
      if (r > cfg.rouge_min || d < cfg.embed_dist_max)
        cands.push_back({r, d, &sn});
    }
    if (cands.empty()) continue;
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.rouge != b.rouge) return a.rouge > b.rouge;
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.snippet->index < b.snippet->index;
    });
    const Cand& best = cands.front();
    out.steps.push_back({step, best.snippet->index, best.snippet->xpath,
                         best.rouge, best.dist});
    prev = best.snippet->index;
    prev_xpath = best.snippet->xpath;
  }
  if (out.steps.empty())
    out.status = GroundingStatus::none;
  else if (out.steps.size() == result.steps.size())
    out.status = GroundingStatus::full;
  else
    out.status = GroundingStatus::partial;
  return out;
}

bool same_grounding(const GroundedInstructions& a,
                    const GroundedInstructions& b) {
  if (a.status != b.status || a.steps.size() != b.steps.size()) return false;
  for (size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i].text != b.steps[i].text) return false;
    if (a.steps[i].snippet_index != b.steps[i].snippet_index) return false;
    if (a.steps[i].xpath != b.steps[i].xpath) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("clean_html strips scripts and keeps list structure") {
  auto cleaned = extract::clean_html(
      "<html><head><script>x</script></head><body><ol><li>Tap A</li></ol>"
      "</body></html>");
  CHECK(cleaned.text.find("script") == std::string::npos);
  CHECK(cleaned.text.find("<ol><li>Tap A</li></ol>") != std::string::npos);
}

TEST_CASE("clean_html preserves nested hierarchy depth") {
  auto snippets = snippets_of(
      "<html><body><div><ol><li>First step here</li></ol></div></body></html>");
  REQUIRE(snippets.size() == 1);
  CHECK(snippets[0].xpath == "/html/body/div/ol/li");
}

TEST_CASE("clean_html on empty body yields zero snippets") {
  CHECK(snippets_of("<html><body></body></html>").empty());
}

TEST_CASE("clean_html rejects empty input as beyond recovery") {
  CHECK_THROWS_AS(extract::clean_html("   \n  "), Error);
}

TEST_CASE("clean_html is idempotent on snippet sets") {
  const char* fixtures[] = {
      "<html><head><style>p{}</style></head><body><h1>T</h1><p>alpha "
      "beta</p><ol><li>one thing</li><li>two things</li></ol></body></html>",
      "<div><p>unclosed paragraph<p>another<ul><li>a point<li>b "
      "point</ul></div>",
      "<body><p>text &amp; <b>bold <i>deep</i></b> tail</p></body>",
  };
  for (const char* f : fixtures) {
    auto once = extract::clean_html(f);
    auto twice = extract::clean_html(once.text);
    auto s1 = extract::index_snippets(once);
    auto s2 = extract::index_snippets(twice);
    REQUIRE(s1.size() == s2.size());
    for (size_t i = 0; i < s1.size(); ++i) {
      CHECK(s1[i].text == s2[i].text);
      CHECK(s1[i].xpath == s2[i].xpath);
    }
  }
}

TEST_CASE("index_snippets: three list items get positional xpaths") {
  auto snippets = snippets_of(
      "<html><body><ol><li>Open Settings</li><li>Tap Sound</li>"
      "<li>Tap Ringtone</li></ol></body></html>");
  REQUIRE(snippets.size() == 3);
  CHECK(snippets[0].xpath == "/html/body/ol/li[1]");
  CHECK(snippets[1].xpath == "/html/body/ol/li[2]");
  CHECK(snippets[2].xpath == "/html/body/ol/li[3]");
  CHECK(snippets[0].index == 0);
  CHECK(snippets[2].index == 2);
  CHECK(snippets[1].text == "Tap Sound");
}

TEST_CASE("index_snippets consolidates inline children into the block") {
  auto snippets = snippets_of(
      "<html><body><p>Tap the <b>Sound</b> &amp; <i>Vibration</i> "
      "entry</p><div>separate block</div></body></html>");
  REQUIRE(snippets.size() == 2);
  CHECK(snippets[0].text == "Tap the Sound & Vibration entry");
  CHECK(snippets[0].xpath == "/html/body/p");
  CHECK(snippets[1].text == "separate block");
}

TEST_CASE("index_snippets: block inside inline still owns its text") {
  auto snippets = snippets_of(
      "<html><body><p>lead <span>in <div>island text</div></span> out</p>"
      "</body></html>");
  std::vector<std::string> texts;
  for (const auto& s : snippets) texts.push_back(s.text);
  CHECK(std::count(texts.begin(), texts.end(), "island text") == 1);
}

TEST_CASE("builtin generator pulls matching list steps in order") {
  auto cleaned = extract::clean_html(
      "<html><body><ol><li>Open Settings now</li><li>Tap Sound</li>"
      "<li>Tap Ringtone</li></ol></body></html>");
  extract::ListGenerator gen;
  auto result = extract::generate_instructions(
      {"how to change ringtone", "settings"}, "title", cleaned, gen);
  REQUIRE(result.steps.size() == 3);
  CHECK(result.steps[0] == "Open Settings now");
  CHECK(result.steps[2] == "Tap Ringtone");
  CHECK(result.generator_id == "builtin-list");
}

TEST_CASE("builtin generator returns none for list-free pages") {
  auto cleaned = extract::clean_html(
      "<html><body><p>No instructions here, only chatter.</p></body></html>");
  extract::ListGenerator gen;
  auto result = extract::generate_instructions(
      {"how to change ringtone", "settings"}, "title", cleaned, gen);
  CHECK(result.steps.empty());
}

TEST_CASE("builtin generator accepts numbered paragraphs") {
  auto cleaned = extract::clean_html(
      "<html><body><p>1. Open Settings on the phone</p><p>Step 2: tap "
      "ringtone</p><p>just prose</p></body></html>");
  extract::ListGenerator gen;
  auto result = extract::generate_instructions(
      {"how to change ringtone", "settings"}, "t", cleaned, gen);
  REQUIRE(result.steps.size() == 2);
}

TEST_CASE("paraphrased steps survive generation and die at grounding") {
  auto cleaned = extract::clean_html(
      "<html><body><p>Open the sound menu from settings.</p></body></html>");
  struct Paraphraser : extract::GeneratorInterface {
    std::string id() const override { return "paraphraser"; }
    std::vector<std::string> generate(const extract::GeneratorInput&) override {
      return {"Navigate over to the audio options panel area"};
    }
  } gen;
  auto result = extract::generate_instructions(
      {"how to change sound", "settings"}, "t", cleaned, gen);
  REQUIRE(result.steps.size() == 1);  // generation keeps it
  auto snippets = extract::index_snippets(cleaned);
  auto embedder = extract::default_embedder();
  auto grounded = extract::ground_instructions(result, snippets, *embedder);
  CHECK(grounded.status == GroundingStatus::none);
  CHECK(grounded.steps.empty());
}

TEST_CASE("rouge_l worked examples") {
  CHECK(extract::rouge_l("tap sound", "tap sound") == doctest::Approx(1.0));
  // LCS("a b c d", "a b x d") = 3 -> P = R = 0.75 -> F = 0.75.
  CHECK(extract::rouge_l("a b c d", "a b x d") == doctest::Approx(0.75));
  CHECK(extract::rouge_l("", "tap") == 0.0);
  CHECK(extract::rouge_l("", "") == 0.0);
  CHECK(extract::rouge_l("a b c", "c b a") < 1.0);
}

TEST_CASE("default embedder is deterministic and unit-norm") {
  auto embedder = extract::default_embedder();
  auto a = embedder->embed("tap sound");
  auto b = embedder->embed("tap sound");
  CHECK(a == b);
  double norm = 0.0;
  for (double v : a) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(extract::embed_distance(a, b) == doctest::Approx(0.0));
  // disjoint token sets: no shared hash bins for these two inputs
  double d = extract::embed_distance(a, embedder->embed("zebra"));
  CHECK(d == doctest::Approx(1.0));
  CHECK(d > 0.25);
  auto zero = embedder->embed("the of and");
  CHECK(std::all_of(zero.begin(), zero.end(),
                    [](double v) { return v == 0.0; }));
  CHECK(extract::embed_distance(zero, a) == doctest::Approx(1.0));
}

TEST_CASE("similar_xpath ignores trailing positional indices only") {
  CHECK(extract::similar_xpath("/html/body/ol/li[1]", "/html/body/ol/li[3]"));
  CHECK(extract::similar_xpath("/html/body/ol[2]/li[1]",
                               "/html/body/ol[1]/li[4]"));
  CHECK(!extract::similar_xpath("/html/body/div[2]/ol/li[1]",
                                "/html/body/div[1]/ol/li[1]"));
  CHECK(!extract::similar_xpath("/html/body/ol/li", "/html/body/ul/li"));
  CHECK(!extract::similar_xpath("/html/body/p", "/html/body/div/p"));
}

TEST_CASE("grounding: verbatim step matches its snippet with rouge 1") {
  auto snippets = snippets_of(
      "<html><body><p>intro text</p><p>more text</p><p>other text</p>"
      "<p>extra text</p><ol><li>Tap Sound now</li></ol></body></html>");
  REQUIRE(snippets.size() == 5);
  ExtractionResult result;
  result.steps = {"Tap Sound now"};
  auto embedder = extract::default_embedder();
  auto grounded = extract::ground_instructions(result, snippets, *embedder);
  REQUIRE(grounded.status == GroundingStatus::full);
  CHECK(grounded.steps[0].snippet_index == 4);
  CHECK(grounded.steps[0].rouge == doctest::Approx(1.0));
  CHECK(grounded.steps[0].rouge > 0.7);
}

TEST_CASE("grounding: step failing both thresholds is dropped") {
  auto snippets = snippets_of(
      "<html><body><ol><li>alpha beta gamma delta</li>"
      "<li>epsilon zeta eta theta</li></ol></body></html>");
  ExtractionResult result;
  result.steps = {"alpha beta gamma delta", "totally unrelated content words"};
  auto embedder = extract::default_embedder();
  auto grounded = extract::ground_instructions(result, snippets, *embedder);
  CHECK(grounded.status == GroundingStatus::partial);
  REQUIRE(grounded.steps.size() == 1);
  CHECK(grounded.steps[0].snippet_index == 0);
}

TEST_CASE("grounding: order consistency rejects earlier best matches") {
  // Step 2's verbatim twin sits BEFORE step 1's snippet; the order rule
  // forces the later sibling copy.
  auto snippets = snippets_of(
      "<html><body><ol>"
      "<li>choose new ringtone sound</li>"
      "<li>open the sound menu</li>"
      "<li>choose new ringtone sound</li>"
      "<li>unrelated filler line</li>"
      "<li>another filler entry</li>"
      "</ol></body></html>");
  REQUIRE(snippets.size() == 5);
  ExtractionResult result;
  result.steps = {"open the sound menu", "choose new ringtone sound"};
  auto embedder = extract::default_embedder();
  auto grounded = extract::ground_instructions(result, snippets, *embedder);
  REQUIRE(grounded.status == GroundingStatus::full);
  CHECK(grounded.steps[0].snippet_index == 1);
  CHECK(grounded.steps[1].snippet_index == 2);  // not 0
  auto oracle = grounding_oracle(result, snippets, *embedder, {});
  CHECK(same_grounding(grounded, oracle));
}

TEST_CASE("grounding agrees with the enumeration oracle on random fixtures") {
  auto embedder = extract::default_embedder();
  const char* vocab[] = {"sound",  "ringtone", "volume", "display",
                         "tap",    "open",     "choose", "menu",
                         "alpha",  "beta",     "gamma",  "delta"};
  Rng rng(2026);
  for (int trial = 0; trial < 200; ++trial) {
    std::string html = "<html><body>";
    int lists = 1 + static_cast<int>(rng.below(3));
    for (int l = 0; l < lists; ++l) {
      html += "<ol>";
      int items = 1 + static_cast<int>(rng.below(4));
      for (int i = 0; i < items; ++i) {
        html += "<li>";
        int words = 2 + static_cast<int>(rng.below(3));
        for (int w = 0; w < words; ++w) {
          html += vocab[rng.below(12)];
          html += " ";
        }
        html += "</li>";
      }
      html += "</ol>";
    }
    html += "</body></html>";
    auto snippets = snippets_of(html);
    ExtractionResult result;
    int steps = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < steps; ++s) {
      std::string text;
      int words = 2 + static_cast<int>(rng.below(3));
      for (int w = 0; w < words; ++w) {
        text += vocab[rng.below(12)];
        text += " ";
      }
      result.steps.push_back(trim(text));
    }
    auto grounded = extract::ground_instructions(result, snippets, *embedder);
    auto oracle = grounding_oracle(result, snippets, *embedder, {});
    CHECK(same_grounding(grounded, oracle));

    int prev = -1;
    for (const auto& step : grounded.steps) {
      CHECK(step.snippet_index > prev);
      prev = step.snippet_index;
      CHECK((step.rouge > 0.7 || step.embed_distance < 0.25));
      bool text_from_generator =
          std::find(result.steps.begin(), result.steps.end(), step.text) !=
          result.steps.end();
      CHECK(text_from_generator);
      bool xpath_known = false;
      for (const auto& sn : snippets)
        if (sn.xpath == step.xpath && sn.index == step.snippet_index)
          xpath_known = true;
      CHECK(xpath_known);
    }
  }
}

TEST_CASE("grounding thresholds default to the documented values") {
  extract::GroundingConfig cfg;
  CHECK(cfg.rouge_min == doctest::Approx(0.7));
  CHECK(cfg.embed_dist_max == doctest::Approx(0.25));
}
