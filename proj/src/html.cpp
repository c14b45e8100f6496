// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/html.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "howto/util.hpp"

namespace howto::html {

namespace {

const std::unordered_set<std::string>& void_tag_set() {
  static const std::unordered_set<std::string> tags = {
      "area",  "base", "br",   "col",  "embed",  "hr",    "img",
      "input", "link", "meta", "param", "source", "track", "wbr"};
  return tags;
}

const std::unordered_set<std::string>& inline_tag_set() {
  static const std::unordered_set<std::string> tags = {
      "a",    "abbr", "b",    "bdi",  "bdo",  "br",     "cite", "code",
      "data", "dfn",  "em",   "font", "i",    "kbd",    "mark", "q",
      "rp",   "rt",   "ruby", "s",    "samp", "small",  "span", "strong",
      "sub",  "sup",  "time", "u",    "var",  "wbr"};
  return tags;
}

// Raw-text elements: content runs to the matching close tag, "<" included.
bool is_raw_text_tag(std::string_view tag) {
  return tag == "script" || tag == "style" || tag == "textarea" ||
         tag == "title";
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp <= 0x7f) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7ff) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp <= 0xffff) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

std::string decode_entities(std::string_view s) {
  static const std::unordered_map<std::string, std::string> named = {
      {"amp", "&"},  {"lt", "<"},    {"gt", ">"},    {"quot", "\""},
      {"apos", "'"}, {"nbsp", " "},  {"ndash", "-"}, {"mdash", "-"},
      {"copy", "(c)"}, {"rsquo", "'"}, {"lsquo", "'"}, {"ldquo", "\""},
      {"rdquo", "\""}};
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    std::string_view body = s.substr(i + 1, semi - i - 1);
    if (!body.empty() && body[0] == '#') {
      uint32_t cp = 0;
      bool ok = body.size() > 1;
      if (body.size() > 1 && (body[1] == 'x' || body[1] == 'X')) {
        for (size_t k = 2; k < body.size() && ok; ++k) {
          char c = body[k];
          cp = cp * 16;
          if (c >= '0' && c <= '9') cp += static_cast<uint32_t>(c - '0');
          else if (c >= 'a' && c <= 'f') cp += static_cast<uint32_t>(c - 'a' + 10);
          else if (c >= 'A' && c <= 'F') cp += static_cast<uint32_t>(c - 'A' + 10);
          else ok = false;
        }
        ok = ok && body.size() > 2;
      } else {
        for (size_t k = 1; k < body.size() && ok; ++k) {
          char c = body[k];
          if (c < '0' || c > '9') { ok = false; break; }
          cp = cp * 10 + static_cast<uint32_t>(c - '0');
        }
      }
      if (ok && cp > 0 && cp <= 0x10ffff) {
        append_utf8(out, cp);
        i = semi + 1;
        continue;
      }
    } else {
      auto it = named.find(std::string(body));
      if (it != named.end()) {
        out += it->second;
        i = semi + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

bool ascii_iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Node run() {
    // Stack of open elements; index 0 is a synthetic container.
    stack_.push_back(Node{Node::Kind::element, "#root", "", {}});
    while (pos_ < src_.size()) step();
    while (stack_.size() > 1) close_top();
    return std::move(stack_.front());
  }

 private:
  void step() {
    if (src_[pos_] != '<') {
      size_t next = src_.find('<', pos_);
      if (next == std::string_view::npos) next = src_.size();
      add_text(src_.substr(pos_, next - pos_));
      pos_ = next;
      return;
    }
    if (starts_with("<!--")) {
      size_t end = src_.find("-->", pos_ + 4);
      pos_ = end == std::string_view::npos ? src_.size() : end + 3;
      return;
    }
    if (starts_with("<!") || starts_with("<?")) {
      size_t end = src_.find('>', pos_);
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      return;
    }
    if (starts_with("</")) {
      size_t end = src_.find('>', pos_);
      if (end == std::string_view::npos) {
        pos_ = src_.size();
        return;
      }
      std::string tag = lower_ascii(trim(src_.substr(pos_ + 2, end - pos_ - 2)));
      pos_ = end + 1;
      close_tag(tag);
      return;
    }
    // Open tag. A "<" not followed by a letter is literal text.
    if (pos_ + 1 >= src_.size() ||
        !std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
      add_text(src_.substr(pos_, 1));
      ++pos_;
      return;
    }
    open_tag();
  }

  void open_tag() {
    size_t p = pos_ + 1;
    size_t tag_start = p;
    while (p < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[p])) ||
            src_[p] == '-' || src_[p] == ':'))
      ++p;
    std::string tag = lower_ascii(src_.substr(tag_start, p - tag_start));
    // Skip attributes, honoring quoted values that may contain '>'.
    bool self_closed = false;
    while (p < src_.size() && src_[p] != '>') {
      char c = src_[p];
      if (c == '"' || c == '\'') {
        size_t close = src_.find(c, p + 1);
        p = close == std::string_view::npos ? src_.size() : close + 1;
      } else if (c == '/' && p + 1 < src_.size() && src_[p + 1] == '>') {
        self_closed = true;
        ++p;
      } else {
        ++p;
      }
    }
    pos_ = p < src_.size() ? p + 1 : src_.size();

    if (is_raw_text_tag(tag)) {
      Node el{Node::Kind::element, tag, "", {}};
      std::string close = "</" + tag;
      size_t start = pos_;
      size_t end = pos_;
      while (end < src_.size()) {
        size_t cand = src_.find('<', end);
        if (cand == std::string_view::npos) {
          end = src_.size();
          break;
        }
        if (cand + close.size() <= src_.size() &&
            ascii_iequals(src_.substr(cand, close.size()), close)) {
          end = cand;
          break;
        }
        end = cand + 1;
      }
      std::string raw(src_.substr(start, end - start));
      if (!raw.empty())
        el.children.push_back(Node{Node::Kind::text, "", raw, {}});
      if (end < src_.size()) {
        size_t gt = src_.find('>', end);
        pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;
      } else {
        pos_ = src_.size();
      }
      top().children.push_back(std::move(el));
      return;
    }

    if (void_tag_set().count(tag) || self_closed) {
      top().children.push_back(Node{Node::Kind::element, tag, "", {}});
      return;
    }

    implied_close(tag);
    stack_.push_back(Node{Node::Kind::element, tag, "", {}});
  }

  // HTML allows omitted end tags for these; close the open one before a
  // sibling starts.
  void implied_close(const std::string& incoming) {
    static const std::unordered_set<std::string> p_closers = {
        "p",  "div", "ol",    "ul",      "li",         "h1",  "h2",
        "h3", "h4",  "h5",    "h6",      "table",      "pre", "section",
        "article",   "aside", "blockquote", "form",    "header", "footer"};
    auto top_tag = [&]() { return stack_.back().tag; };
    if ((incoming == "li" && top_tag() == "li") ||
        ((incoming == "dt" || incoming == "dd") &&
         (top_tag() == "dt" || top_tag() == "dd")) ||
        (incoming == "option" && top_tag() == "option") ||
        ((incoming == "td" || incoming == "th") &&
         (top_tag() == "td" || top_tag() == "th")) ||
        (incoming == "tr" &&
         (top_tag() == "tr" || top_tag() == "td" || top_tag() == "th"))) {
      close_top();
    }
    if (top_tag() == "p" && p_closers.count(incoming)) close_top();
  }

  void close_tag(const std::string& tag) {
    // Find a matching open element; ignore strays.
    for (size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i].tag == tag) {
        while (stack_.size() > i) close_top();
        return;
      }
    }
  }

  void close_top() {
    Node done = std::move(stack_.back());
    stack_.pop_back();
    stack_.back().children.push_back(std::move(done));
  }

  void add_text(std::string_view raw) {
    if (raw.empty()) return;
    top().children.push_back(
        Node{Node::Kind::text, "", decode_entities(raw), {}});
  }

  Node& top() { return stack_.back(); }

  bool starts_with(std::string_view prefix) const {
    return src_.substr(pos_, prefix.size()) == prefix;
  }

  std::string_view src_;
  size_t pos_ = 0;
  std::vector<Node> stack_;
};

bool whitespace_only(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

}  // namespace

bool is_void_tag(std::string_view tag) {
  return void_tag_set().count(std::string(tag)) > 0;
}

bool is_inline_tag(std::string_view tag) {
  return inline_tag_set().count(std::string(tag)) > 0;
}

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

std::string normalize_ws(std::string_view text) {
  std::string out;
  bool in_space = true;  // leading whitespace dropped
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(ch);
      in_space = false;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

Node parse_document(std::string_view source) {
  if (trim(source).empty())
    throw Error("html: empty document, nothing to recover");
  Node root = Parser(source).run();

  // Normalize to a single html element containing head(s) then one body.
  std::vector<Node> items;
  for (auto& child : root.children) {
    if (child.is_element("html")) {
      for (auto& grand : child.children) items.push_back(std::move(grand));
    } else {
      items.push_back(std::move(child));
    }
  }
  Node doc{Node::Kind::element, "html", "", {}};
  Node body{Node::Kind::element, "body", "", {}};
  bool have_body = false;
  std::vector<Node> strays;
  for (auto& item : items) {
    if (item.is_element("head")) {
      doc.children.push_back(std::move(item));
    } else if (item.is_element("body")) {
      if (!have_body) {
        body = std::move(item);
        have_body = true;
      } else {
        for (auto& grand : item.children)
          body.children.push_back(std::move(grand));
      }
    } else {
      if (item.kind == Node::Kind::text && whitespace_only(item.text)) continue;
      strays.push_back(std::move(item));
    }
  }
  for (auto& stray : strays) body.children.push_back(std::move(stray));
  doc.children.push_back(std::move(body));
  return doc;
}

}  // namespace howto::html
