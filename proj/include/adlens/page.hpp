#pragma once

// Page documents and visual-element extraction.
//
// Documents are a minimal HTML subset: nested tags with quoted attributes,
// text, and void elements (img, embed, br, hr, meta, link, input). No script
// execution; sources emit post-execution markup. iframe boundaries are kept
// as ordinary elements whose src provides context to descendants.

#include <cstdlib>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adlens/text.hpp"

namespace adlens {

struct PageElement {
  std::string tag;  // empty tag => text node
  std::string text;
  std::vector<std::pair<std::string, std::string>> attributes;  // document order
  std::vector<std::unique_ptr<PageElement>> children;

  std::optional<std::string> attr(const std::string& name) const {
    for (const auto& [k, v] : attributes)
      if (k == name) return v;
    return std::nullopt;
  }
};

struct PageDocument {
  std::string url;
  std::string domain;
  std::unique_ptr<PageElement> root;  // synthetic container element

  PageDocument() : root(std::make_unique<PageElement>()) { root->tag = "html"; }
  PageDocument(PageDocument&&) = default;
  PageDocument& operator=(PageDocument&&) = default;
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error("page parse: " + what) {}
};

namespace detail {

inline bool is_void_tag(const std::string& tag) {
  return tag == "img" || tag == "embed" || tag == "br" || tag == "hr" || tag == "meta" ||
         tag == "link" || tag == "input";
}

inline void escape_into(std::string& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
}

inline std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      if (s.substr(i, 5) == "&amp;") { out += '&'; i += 4; continue; }
      if (s.substr(i, 4) == "&lt;") { out += '<'; i += 3; continue; }
      if (s.substr(i, 4) == "&gt;") { out += '>'; i += 3; continue; }
      if (s.substr(i, 6) == "&quot;") { out += '"'; i += 5; continue; }
    }
    out += s[i];
  }
  return out;
}

inline void serialize_element(const PageElement& el, std::string& out) {
  if (el.tag.empty()) {
    escape_into(out, el.text);
    return;
  }
  out += "<" + el.tag;
  for (const auto& [k, v] : el.attributes) {
    out += " " + k + "=\"";
    escape_into(out, v);
    out += "\"";
  }
  if (is_void_tag(el.tag)) {
    out += "/>";
    return;
  }
  out += ">";
  for (const auto& child : el.children) serialize_element(*child, out);
  out += "</" + el.tag + ">";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::unique_ptr<PageElement> run() {
    auto root = std::make_unique<PageElement>();
    root->tag = "html";
    parse_children(*root, "");
    // Whitespace between top-level pieces (doctype, root element) is noise.
    std::erase_if(root->children, [](const std::unique_ptr<PageElement>& el) {
      return el->tag.empty() && trim(el->text).empty();
    });
    // Accept either a single <html> wrapper or a bare fragment.
    if (root->children.size() == 1 && root->children[0]->tag == "html") {
      auto inner = std::move(root->children[0]);
      return inner;
    }
    return root;
  }

 private:
  void parse_children(PageElement& parent, const std::string& closing_tag) {
    std::string text;
    auto flush_text = [&] {
      if (text.empty()) return;
      auto node = std::make_unique<PageElement>();
      node->text = unescape(text);
      parent.children.push_back(std::move(node));
      text.clear();
    };
    while (pos_ < src_.size()) {
      if (src_[pos_] != '<') {
        text += src_[pos_++];
        continue;
      }
      if (src_.substr(pos_, 4) == "<!--") {
        size_t end = src_.find("-->", pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        flush_text();
        size_t end = src_.find('>', pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated close tag");
        std::string tag = trim(std::string(src_.substr(pos_ + 2, end - pos_ - 2)));
        pos_ = end + 1;
        if (tag != closing_tag) throw ParseError("mismatched close tag: " + tag);
        return;
      }
      flush_text();
      parse_element(parent);
    }
    flush_text();
    if (!closing_tag.empty()) throw ParseError("missing close tag: " + closing_tag);
  }

  void parse_element(PageElement& parent) {
    ++pos_;  // consume '<'
    auto node = std::make_unique<PageElement>();
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                  src_[pos_] == '-' || src_[pos_] == '!'))
      node->tag += src_[pos_++];
    if (node->tag.empty()) throw ParseError("empty tag name");
    if (node->tag[0] == '!') {  // doctype and friends: skip to '>'
      size_t end = src_.find('>', pos_);
      if (end == std::string_view::npos) throw ParseError("unterminated declaration");
      pos_ = end + 1;
      return;
    }
    node->tag = to_lower(node->tag);
    bool self_closed = false;
    while (pos_ < src_.size()) {
      skip_space();
      if (pos_ >= src_.size()) throw ParseError("unterminated tag");
      if (src_[pos_] == '>') { ++pos_; break; }
      if (src_[pos_] == '/') {
        ++pos_;
        skip_space();
        if (pos_ >= src_.size() || src_[pos_] != '>') throw ParseError("bad self-close");
        ++pos_;
        self_closed = true;
        break;
      }
      parse_attribute(*node);
    }
    bool void_tag = is_void_tag(node->tag);
    if (!self_closed && !void_tag) {
      parse_children(*node, node->tag);
    }
    parent.children.push_back(std::move(node));
  }

  void parse_attribute(PageElement& node) {
    std::string name;
    while (pos_ < src_.size() && src_[pos_] != '=' && src_[pos_] != '>' && src_[pos_] != '/' &&
           !std::isspace(static_cast<unsigned char>(src_[pos_])))
      name += src_[pos_++];
    if (name.empty()) throw ParseError("empty attribute name");
    name = to_lower(name);
    skip_space();
    if (pos_ >= src_.size() || src_[pos_] != '=') {
      node.attributes.emplace_back(name, "");  // bare attribute
      return;
    }
    ++pos_;
    skip_space();
    if (pos_ >= src_.size()) throw ParseError("unterminated attribute");
    std::string value;
    if (src_[pos_] == '"' || src_[pos_] == '\'') {
      char quote = src_[pos_++];
      size_t end = src_.find(quote, pos_);
      if (end == std::string_view::npos) throw ParseError("unterminated attribute value");
      value = unescape(src_.substr(pos_, end - pos_));
      pos_ = end + 1;
    } else {
      while (pos_ < src_.size() && src_[pos_] != '>' &&
             !std::isspace(static_cast<unsigned char>(src_[pos_])))
        value += src_[pos_++];
    }
    node.attributes.emplace_back(name, value);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  std::string_view src_;
  size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_page(const PageDocument& page) {
  std::string out = "<!doctype html>\n";
  detail::serialize_element(*page.root, out);
  out += "\n";
  return out;
}

inline PageDocument parse_page(std::string_view html, const std::string& url) {
  PageDocument page;
  page.url = url;
  page.domain = url_host(url);
  detail::Parser parser(html);
  page.root = parser.run();
  return page;
}

// --- Visual elements ---------------------------------------------------------

struct VisualElement {
  std::string element_id;  // id attribute when present
  std::string source_url;
  std::optional<std::string> iframe_url;
  std::optional<std::string> landing_url;
  std::optional<std::string> div_class;
  int width = 0;
  int height = 0;
};

namespace detail {

struct ExtractContext {
  std::optional<std::string> iframe_url;
  std::optional<std::string> anchor_href;
  std::optional<std::string> div_class;
};

inline void extract_walk(const PageElement& el, ExtractContext ctx,
                         std::vector<VisualElement>& out) {
  if (el.tag == "iframe") {
    if (auto src = el.attr("src")) ctx.iframe_url = *src;
  } else if (el.tag == "a") {
    if (auto href = el.attr("href")) ctx.anchor_href = *href;
  } else if (el.tag == "div") {
    if (auto cls = el.attr("class")) ctx.div_class = *cls;
  } else if (el.tag == "img" || el.tag == "embed") {
    VisualElement v;
    if (auto id = el.attr("id")) v.element_id = *id;
    if (auto src = el.attr("src")) v.source_url = *src;
    v.iframe_url = ctx.iframe_url;
    // Landing resolution order: enclosing anchor, then data-landing attribute.
    if (ctx.anchor_href) {
      v.landing_url = ctx.anchor_href;
    } else if (auto dl = el.attr("data-landing")) {
      v.landing_url = *dl;
    }
    v.div_class = ctx.div_class;
    // Attribute-declared dimensions only; style-derived sizes are not read.
    if (auto w = el.attr("width")) v.width = std::atoi(w->c_str());
    if (auto h = el.attr("height")) v.height = std::atoi(h->c_str());
    out.push_back(std::move(v));
    return;
  }
  for (const auto& child : el.children) extract_walk(*child, ctx, out);
}

}  // namespace detail

// One VisualElement per img/embed node, in document order. Pure.
inline std::vector<VisualElement> extract_visual_elements(const PageDocument& page) {
  std::vector<VisualElement> out;
  detail::extract_walk(*page.root, {}, out);
  return out;
}

}  // namespace adlens
