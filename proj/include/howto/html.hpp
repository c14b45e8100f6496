// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace howto::html {

/// Minimal DOM node. Attributes are intentionally not kept: nothing
/// downstream reads them and dropping them here keeps cleaning cheap.
struct Node {
  enum class Kind { element, text };
  Kind kind = Kind::element;
  std::string tag;   // lowercase; element nodes only
  std::string text;  // decoded; text nodes only
  std::vector<Node> children;

  bool is_element(std::string_view t) const {
    return kind == Kind::element && tag == t;
  }
};

/// Tolerant parse: repairs unclosed tags, auto-closes li/p/td/..., treats
/// script/style as raw text, skips comments and doctype, decodes entities.
/// Always yields an <html> root with a <body> (synthesized when absent).
/// Throws howto::Error only when input is irrecoverably non-HTML
/// (no tags and no text).
Node parse_document(std::string_view html);

bool is_void_tag(std::string_view tag);
bool is_inline_tag(std::string_view tag);

/// Escapes &, <, > for re-serialization.
std::string escape_text(std::string_view text);

/// Collapses whitespace runs to single spaces and trims.
std::string normalize_ws(std::string_view text);

}  // namespace howto::html
