#pragma once

// Advertiser categorization from multiple partial sources. The first source
// in priority order containing the domain wins; its raw label is resolved to
// a canonical category through the cross-source map. Unmapped domains land in
// "Unknown".

#include <map>
#include <string>
#include <vector>

#include "adlens/text.hpp"

namespace adlens {

inline constexpr const char* kUnknownCategory = "Unknown";

class CategoryMapping {
 public:
  struct Source {
    std::string name;
    std::map<std::string, std::string> domain_to_raw;
  };

  void add_source(Source s) { sources_.push_back(std::move(s)); }
  void add_resolution(const std::string& raw, const std::string& canonical) {
    resolution_[raw] = canonical;
  }

  const std::vector<Source>& sources() const { return sources_; }

  // Source file: domain<TAB>raw_category per line.
  static Source load_source_file(const std::string& name, const std::filesystem::path& p) {
    Source s;
    s.name = name;
    for (const auto& raw : read_lines(p)) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      auto f = split(line, '\t');
      if (f.size() != 2) throw std::runtime_error("bad category source line: " + line);
      s.domain_to_raw[f[0]] = f[1];
    }
    return s;
  }

  // Resolution file: raw<TAB>canonical per line.
  void load_resolution_file(const std::filesystem::path& p) {
    for (const auto& raw : read_lines(p)) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      auto f = split(line, '\t');
      if (f.size() != 2) throw std::runtime_error("bad resolution line: " + line);
      add_resolution(f[0], f[1]);
    }
  }

  // A raw label with no resolution entry is already canonical.
  std::string resolve_raw(const std::string& raw) const {
    auto it = resolution_.find(raw);
    return it == resolution_.end() ? raw : it->second;
  }

  struct Outcome {
    std::string category;
    bool mapped = false;
    std::string source;  // which source won, empty if unmapped
  };

  Outcome categorize(const std::string& domain) const {
    for (const auto& s : sources_) {
      auto it = s.domain_to_raw.find(domain);
      if (it != s.domain_to_raw.end()) return {resolve_raw(it->second), true, s.name};
    }
    return {kUnknownCategory, false, ""};
  }

 private:
  std::vector<Source> sources_;
  std::map<std::string, std::string> resolution_;
};

inline std::string categorize_advertiser(const CategoryMapping& mapping,
                                         const std::string& domain) {
  return mapping.categorize(domain).category;
}

}  // namespace adlens
