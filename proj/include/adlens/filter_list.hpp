#pragma once

// Ad-filter rule matching over a documented subset of the common filter-list
// grammar: literal substrings, '*' wildcards, '||' registrable-domain anchors,
// and '^' separator placeholders. Matching is case-insensitive. File format:
// one pattern per line, '!'-prefixed comments ignored.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adlens/page.hpp"
#include "adlens/text.hpp"

namespace adlens {

enum class RuleKind { Substring, DomainAnchor, Wildcard };

struct FilterRule {
  RuleKind kind = RuleKind::Substring;
  std::string body;    // lowercase pattern, '||' stripped for domain anchors
  std::string raw;     // original line, reported on match
  std::string domain;  // anchor domain for DomainAnchor rules
  std::string tail;    // pattern after the anchor domain (may be empty)
};

namespace detail {

inline bool is_separator(char c) {
  // Separator class: anything that is not alphanumeric and not in "-._%".
  if (std::isalnum(static_cast<unsigned char>(c))) return false;
  return c != '-' && c != '.' && c != '_' && c != '%';
}

// Matches pattern (with '*' wildcards and '^' separators) against text
// starting exactly at text[from]. '^' also matches the end of the text.
inline bool match_here(std::string_view pattern, std::string_view text, size_t from);

inline bool match_tail(std::string_view pattern, std::string_view text, size_t from) {
  if (pattern.empty()) return true;
  if (pattern[0] == '*') {
    for (size_t i = from; i <= text.size(); ++i)
      if (match_tail(pattern.substr(1), text, i)) return true;
    return false;
  }
  if (pattern[0] == '^') {
    if (from == text.size()) return match_tail(pattern.substr(1), text, from);
    if (!is_separator(text[from])) return false;
    return match_tail(pattern.substr(1), text, from + 1);
  }
  if (from >= text.size()) return false;
  if (pattern[0] != text[from]) return false;
  return match_tail(pattern.substr(1), text, from + 1);
}

inline bool match_here(std::string_view pattern, std::string_view text, size_t from) {
  return match_tail(pattern, text, from);
}

// Pattern may start matching at any offset.
inline bool match_anywhere(std::string_view pattern, std::string_view text) {
  for (size_t i = 0; i <= text.size(); ++i)
    if (match_here(pattern, text, i)) return true;
  return false;
}

}  // namespace detail

class FilterList {
 public:
  FilterList() = default;

  static FilterList parse(const std::vector<std::string>& lines) {
    FilterList list;
    for (const auto& raw : lines) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '!') continue;
      list.add_rule(line);
    }
    return list;
  }

  static FilterList load_file(const std::filesystem::path& p) { return parse(read_lines(p)); }

  void add_rule(const std::string& line) {
    FilterRule r;
    r.raw = line;
    std::string body = to_lower(line);
    if (body.rfind("||", 0) == 0) {
      r.kind = RuleKind::DomainAnchor;
      r.body = body.substr(2);
      size_t cut = r.body.find_first_of("^/*");
      r.domain = r.body.substr(0, cut);
      r.tail = cut == std::string::npos ? "" : r.body.substr(cut);
    } else {
      // '^' needs the pattern matcher too (separator class).
      r.kind = body.find_first_of("*^") != std::string::npos ? RuleKind::Wildcard
                                                             : RuleKind::Substring;
      r.body = body;
    }
    rules_.push_back(std::move(r));
  }

  size_t size() const { return rules_.size(); }
  const std::vector<FilterRule>& rules() const { return rules_; }

  // True if any rule matches the text (a URL or a bare token such as a div
  // class). Rules are tried in list order.
  bool matches(std::string_view text) const { return match_rule(text) != nullptr; }

  const FilterRule* match_rule(std::string_view text) const {
    std::string lower = to_lower(text);
    for (const auto& r : rules_)
      if (rule_matches(r, lower)) return &r;
    return nullptr;
  }

  // The spec's four-field element test: source URL, iframe URL, div class,
  // landing URL. First matching rule reported.
  std::pair<bool, std::optional<std::string>> match_element(const VisualElement& el) const {
    std::vector<std::string> fields;
    fields.push_back(el.source_url);
    if (el.iframe_url) fields.push_back(*el.iframe_url);
    if (el.div_class) fields.push_back(*el.div_class);
    if (el.landing_url) fields.push_back(*el.landing_url);
    for (const auto& r : rules_) {
      for (const auto& f : fields) {
        if (rule_matches(r, to_lower(f))) return {true, r.raw};
      }
    }
    return {false, std::nullopt};
  }

 private:
  static bool rule_matches(const FilterRule& r, std::string_view lower_text) {
    switch (r.kind) {
      case RuleKind::Substring:
        return lower_text.find(r.body) != std::string_view::npos;
      case RuleKind::Wildcard:
        return detail::match_anywhere(r.body, lower_text);
      case RuleKind::DomainAnchor: {
        auto url = parse_url(lower_text);
        if (!url) return false;
        const std::string& host = url->host;
        bool host_hit = host == r.domain ||
                        (host.size() > r.domain.size() &&
                         host.compare(host.size() - r.domain.size(), std::string::npos,
                                      r.domain) == 0 &&
                         host[host.size() - r.domain.size() - 1] == '.');
        if (!host_hit) return false;
        if (r.tail.empty()) return true;
        // Remainder of the pattern continues right after the host.
        size_t host_end = url->scheme.size() + 3 + host.size();
        return detail::match_here(r.tail, lower_text, host_end);
      }
    }
    return false;
  }

  std::vector<FilterRule> rules_;
};

// --- Dimension test ----------------------------------------------------------

class DimensionList {
 public:
  DimensionList() = default;
  explicit DimensionList(std::set<std::pair<int, int>> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::runtime_error("empty dimension list");
  }

  // The 25 standard display sizes shipped by default.
  static const DimensionList& standard() {
    static const DimensionList dims{{
        {728, 90},  {300, 250}, {160, 600}, {468, 60},  {320, 50},
        {300, 600}, {970, 250}, {336, 280}, {120, 600}, {250, 250},
        {200, 200}, {180, 150}, {125, 125}, {234, 60},  {970, 90},
        {320, 100}, {300, 50},  {300, 100}, {120, 240}, {240, 400},
        {980, 120}, {930, 180}, {580, 400}, {750, 200}, {88, 31},
    }};
    return dims;
  }

  // File format: one "WxH" per line, '#' comments ignored.
  static DimensionList load_file(const std::filesystem::path& p) {
    std::set<std::pair<int, int>> entries;
    for (const auto& raw : read_lines(p)) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      auto parts = split(line, 'x');
      if (parts.size() != 2) throw std::runtime_error("bad dimension line: " + line);
      entries.insert({std::stoi(parts[0]), std::stoi(parts[1])});
    }
    return DimensionList(std::move(entries));
  }

  bool contains(int width, int height) const { return entries_.count({width, height}) != 0; }
  size_t size() const { return entries_.size(); }
  const std::set<std::pair<int, int>>& entries() const { return entries_; }

 private:
  std::set<std::pair<int, int>> entries_;
};

inline bool dimension_test(const DimensionList& dims, const VisualElement& el) {
  return dims.contains(el.width, el.height);
}

}  // namespace adlens
