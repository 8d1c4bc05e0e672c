#pragma once

// Three-step ad identification: filter-list test, dimension test, self-ad
// (external link) test. An element is an ad iff all three pass. Strict
// conjunction keeps precision high at the cost of false negatives.

#include <optional>
#include <set>
#include <string>

#include "adlens/filter_list.hpp"
#include "adlens/page.hpp"
#include "adlens/text.hpp"

namespace adlens {

// Two-level public suffixes for registrable-domain derivation. Replaceable;
// not a full public-suffix list.
class SuffixTable {
 public:
  SuffixTable() : suffixes_(defaults()) {}
  explicit SuffixTable(std::set<std::string> suffixes) : suffixes_(std::move(suffixes)) {}

  static SuffixTable load_file(const std::filesystem::path& p) {
    std::set<std::string> s;
    for (const auto& raw : read_lines(p)) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      s.insert(to_lower(line));
    }
    return SuffixTable(std::move(s));
  }

  bool is_two_level_suffix(const std::string& suffix) const {
    return suffixes_.count(suffix) != 0;
  }

  // Last two labels, or last three when the trailing two form a listed
  // suffix (e.g. "co.uk").
  std::string registrable_domain(const std::string& host) const {
    auto labels = split(to_lower(host), '.');
    if (labels.size() <= 2) return to_lower(host);
    std::string last_two = labels[labels.size() - 2] + "." + labels.back();
    size_t keep = is_two_level_suffix(last_two) ? 3 : 2;
    std::string out;
    for (size_t i = labels.size() - keep; i < labels.size(); ++i) {
      if (!out.empty()) out += ".";
      out += labels[i];
    }
    return out;
  }

 private:
  static std::set<std::string> defaults() {
    return {"co.uk", "org.uk", "ac.uk", "co.jp", "com.au", "com.br",
            "co.in", "co.nz", "com.mx", "com.cn", "com.tr", "co.za"};
  }
  std::set<std::string> suffixes_;
};

// True iff the element links out of the page's registrable domain.
// An absent landing URL fails this test (and only this test).
inline bool self_ad_test(const VisualElement& el, const std::string& page_domain,
                         const SuffixTable& suffixes = SuffixTable{}) {
  if (!el.landing_url) return false;
  std::string landing_host = url_host(*el.landing_url);
  if (landing_host.empty()) return false;
  return suffixes.registrable_domain(landing_host) !=
         suffixes.registrable_domain(page_domain);
}

inline std::pair<bool, std::optional<std::string>> match_filter(const FilterList& list,
                                                                const VisualElement& el) {
  return list.match_element(el);
}

struct Classification {
  bool is_ad = false;
  bool filter_pass = false;
  bool dimension_pass = false;
  bool self_ad_pass = false;
  std::optional<std::string> matched_rule;
};

inline Classification classify(const VisualElement& el, const std::string& page_domain,
                               const FilterList& list, const DimensionList& dims,
                               const SuffixTable& suffixes = SuffixTable{}) {
  Classification c;
  auto [hit, rule] = list.match_element(el);
  c.filter_pass = hit;
  c.matched_rule = rule;
  c.dimension_pass = dimension_test(dims, el);
  c.self_ad_pass = self_ad_test(el, page_domain, suffixes);
  c.is_ad = c.filter_pass && c.dimension_pass && c.self_ad_pass;
  return c;
}

}  // namespace adlens
