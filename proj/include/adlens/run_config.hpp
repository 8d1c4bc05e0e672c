#pragma once

// Run configuration shared by every CLI subcommand. Values come from
// built-in defaults, then an optional key=value config file, then flags.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adlens/controller.hpp"
#include "adlens/text.hpp"

namespace adlens {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  std::string data_dir = "data";

  // Inputs; empty entries resolve against out_dir/ecosystem or data_dir.
  std::string catalog;
  std::string filters;
  std::string taxonomy;
  std::string dimensions;
  std::string suffixes;
  std::string demographics;
  std::string category_source1;
  std::string category_source2;
  std::string category_resolution;

  // gen-ecosystem
  int sites = 12;
  int advertisers = 100;
  int campaigns = 500;
  double targeted_fraction = 0.5;
  double demo_fraction = 0.35;
  double capped_fraction = 0.08;
  std::string cap_plants = "3,7";
  int premium_sites = 1;
  int withheld_servers = 0;
  double untargeted_bias = 0.0;
  double direct_fraction = 0.3;
  double tracker_fraction = 0.5;
  double zipf_exponent = 1.1;

  // personas
  std::string persona_levels = "2";
  int persona_count = 16;  // 0 = all available
  int persona_sites = 3;

  // survey + plan
  int survey_visits = 5;
  long long cover_budget = 1000000;
  int top_k = 40;
  int min_occurrences = 3;

  // crawl
  std::string strategies = "long,short";
  int workers = 2;
  int timeout_s = 70;
  int retries = 2;
  double resolver_fault_rate = 0.0;

  std::filesystem::path out() const { return out_dir; }
  std::filesystem::path eco_dir() const { return out() / "ecosystem"; }

  std::filesystem::path catalog_path() const {
    return catalog.empty() ? eco_dir() / "catalog.txt" : std::filesystem::path(catalog);
  }
  std::filesystem::path filters_path() const {
    return filters.empty() ? eco_dir() / "filters.txt" : std::filesystem::path(filters);
  }
  std::filesystem::path taxonomy_path() const {
    return taxonomy.empty() ? std::filesystem::path(data_dir) / "taxonomy.tsv"
                            : std::filesystem::path(taxonomy);
  }
  std::filesystem::path dimensions_path() const {
    return dimensions.empty() ? std::filesystem::path(data_dir) / "dimensions.txt"
                              : std::filesystem::path(dimensions);
  }
  std::filesystem::path suffixes_path() const {
    return suffixes.empty() ? std::filesystem::path(data_dir) / "suffixes.txt"
                            : std::filesystem::path(suffixes);
  }
  std::filesystem::path demographics_path() const {
    return demographics.empty() ? std::filesystem::path(data_dir) / "demographics.tsv"
                                : std::filesystem::path(demographics);
  }
  std::filesystem::path category_source1_path() const {
    return category_source1.empty() ? eco_dir() / "category_source1.tsv"
                                    : std::filesystem::path(category_source1);
  }
  std::filesystem::path category_source2_path() const {
    return category_source2.empty() ? eco_dir() / "category_source2.tsv"
                                    : std::filesystem::path(category_source2);
  }
  std::filesystem::path category_resolution_path() const {
    return category_resolution.empty() ? eco_dir() / "category_resolution.tsv"
                                       : std::filesystem::path(category_resolution);
  }

  std::filesystem::path personas_path() const { return out() / "personas.ndjson"; }
  std::filesystem::path survey_obs_path() const { return out() / "survey_obs.tsv"; }
  std::filesystem::path focus_set_path() const { return out() / "focus_set.tsv"; }
  std::filesystem::path plan_report_path() const { return out() / "plan_report.txt"; }
  std::filesystem::path impressions_path() const { return out() / "impressions.ndjson"; }
  std::filesystem::path miss_log_path() const { return out() / "miss_log.txt"; }
  std::filesystem::path resolver_cache_path() const { return out() / "resolver_cache.tsv"; }
  std::filesystem::path crawl_summary_path() const { return out() / "crawl_summary.txt"; }
  std::filesystem::path reports_dir() const { return out() / "reports"; }
  std::filesystem::path manifests_dir() const { return out() / "manifests"; }

  std::vector<StrategySpec> strategy_list() const {
    std::vector<StrategySpec> out_list;
    for (const auto& name : split(strategies, ',')) {
      std::string s = trim(name);
      if (s.empty()) continue;
      if (s == "long") {
        out_list.push_back(StrategySpec::long_preset());
      } else if (s == "short") {
        out_list.push_back(StrategySpec::short_preset());
      } else {
        // custom strategy: name:alpha:beta
        auto parts = split(s, ':');
        if (parts.size() != 3) throw std::runtime_error("bad strategy spec: " + s);
        out_list.push_back({std::stoi(parts[1]), std::stoi(parts[2]), parts[0]});
      }
    }
    if (out_list.empty()) throw std::runtime_error("no strategies configured");
    return out_list;
  }

  std::vector<int> cap_plant_list() const {
    std::vector<int> caps;
    for (const auto& c : split(cap_plants, ',')) {
      std::string s = trim(c);
      if (!s.empty()) caps.push_back(std::stoi(s));
    }
    return caps;
  }

  std::vector<int> persona_level_list() const {
    std::vector<int> levels;
    for (const auto& l : split(persona_levels, ',')) {
      std::string s = trim(l);
      if (!s.empty()) levels.push_back(std::stoi(s));
    }
    if (levels.empty()) throw std::runtime_error("no persona levels configured");
    return levels;
  }

  // Canonical rendering; hashed into stage manifests so config changes
  // invalidate stale artifacts.
  std::string to_key_values() const {
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    kv("seed", std::to_string(seed));
    kv("out_dir", out_dir);
    kv("catalog", catalog_path().string());
    kv("filters", filters_path().string());
    kv("taxonomy", taxonomy_path().string());
    kv("dimensions", dimensions_path().string());
    kv("suffixes", suffixes_path().string());
    kv("demographics", demographics_path().string());
    kv("sites", std::to_string(sites));
    kv("advertisers", std::to_string(advertisers));
    kv("campaigns", std::to_string(campaigns));
    kv("targeted_fraction", std::to_string(targeted_fraction));
    kv("demo_fraction", std::to_string(demo_fraction));
    kv("capped_fraction", std::to_string(capped_fraction));
    kv("cap_plants", cap_plants);
    kv("premium_sites", std::to_string(premium_sites));
    kv("withheld_servers", std::to_string(withheld_servers));
    kv("untargeted_bias", std::to_string(untargeted_bias));
    kv("direct_fraction", std::to_string(direct_fraction));
    kv("tracker_fraction", std::to_string(tracker_fraction));
    kv("zipf_exponent", std::to_string(zipf_exponent));
    kv("persona_levels", persona_levels);
    kv("persona_count", std::to_string(persona_count));
    kv("persona_sites", std::to_string(persona_sites));
    kv("survey_visits", std::to_string(survey_visits));
    kv("cover_budget", std::to_string(cover_budget));
    kv("top_k", std::to_string(top_k));
    kv("min_occurrences", std::to_string(min_occurrences));
    kv("strategies", strategies);
    kv("workers", std::to_string(workers));
    kv("timeout_s", std::to_string(timeout_s));
    kv("retries", std::to_string(retries));
    kv("resolver_fault_rate", std::to_string(resolver_fault_rate));
    return s;
  }
};

}  // namespace adlens
