#pragma once

// Seeded ecosystem generation: sites, advertisers, campaigns with planted
// phenomena (frequency caps, premium contracts, targeting mix, click styles,
// withheld filter rules), plus the matching filter list, category-mapping
// sources, and a ground-truth manifest describing every plant.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adlens/catalog.hpp"
#include "adlens/category_map.hpp"
#include "adlens/category_tree.hpp"
#include "adlens/filter_list.hpp"
#include "adlens/rng.hpp"

namespace adlens {

struct GenConfig {
  uint64_t seed = 1;
  int sites = 15;
  int advertisers = 120;
  int campaigns = 600;

  // Campaign mix.
  double targeted_fraction = 0.5;   // interest-targeted share
  double demo_fraction = 0.35;      // of targeted: also gender/age constrained
  double capped_fraction = 0.10;    // of ordinary campaigns: random small caps
  double zipf_exponent = 1.1;       // weight = 1 / rank^exponent
  double direct_fraction = 0.3;     // click styles; remainder after direct and
  double tracker_fraction = 0.5;    // tracker is opaque
  double unranked_fraction = 0.015; // advertisers without a global rank

  // Plants.
  std::vector<int> cap_plants;       // dominant-weight campaigns with these caps
  int capped_per_plant = 1;
  int premium_sites = 1;             // leading sites that get 2 premium slots
  int withheld_servers = 0;          // ad servers left out of the filter list
  double untargeted_category_bias = 0.0;  // untargeted advertisers pulled to one category
  std::string bias_category = "Restaurants";

  // Site shape.
  int site_categories_max = 4;
  int category_coverage = 3;  // each persona target appears on >= this many sites
  bool placement_outlier = true;  // one site with 16 slots

  const CategoryTree* tree = nullptr;               // required
  std::vector<std::string> persona_targets;         // default: all level-2 ids
};

struct GeneratedEcosystem {
  Catalog catalog;
  std::vector<std::string> filter_lines;
  std::vector<std::string> withheld_servers;  // servers with no filter rule
  std::vector<std::string> servers;
  CategoryMapping mapping;
  std::string mapping_source1_text;  // domain<TAB>raw per line
  std::string mapping_source2_text;
  std::string resolution_text;       // raw<TAB>canonical per line
  std::map<std::string, std::string> manifest;  // planted facts, key=value
};

namespace detail {

inline const std::vector<std::string>& site_bases() {
  static const std::vector<std::string> bases = {
      "news",  "sports", "tech",   "cook",  "travel", "health", "home", "finance",
      "games", "cars",   "pets",   "shop",  "movies", "weather", "deals", "metro",
      "pulse", "globe",  "digest", "daily", "affairs", "review", "tribune", "signal"};
  return bases;
}

inline const std::vector<std::string>& server_pool() {
  static const std::vector<std::string> servers = {
      "nexus-ads.example", "bannerhub.example",  "adgrid.example",
      "pixelserve.example", "mediarail.example", "shadowserve.example",
      "ghostnet-ads.example"};
  return servers;
}

}  // namespace detail

inline GeneratedEcosystem generate_ecosystem(const GenConfig& cfg) {
  if (!cfg.tree) throw std::runtime_error("generate_ecosystem: taxonomy required");
  GeneratedEcosystem out;
  Rng rng = Rng::derive({cfg.seed, 0x9e0ULL});

  std::vector<std::string> targets = cfg.persona_targets;
  if (targets.empty()) targets = cfg.tree->ids_at_level(2);
  if (targets.empty()) throw std::runtime_error("generate_ecosystem: no persona targets");

  std::vector<std::string> canonicals;
  for (const auto& n : cfg.tree->nodes())
    if (n.level == 1) canonicals.push_back(n.id);
  std::sort(canonicals.begin(), canonicals.end());

  // --- Ad servers and filter list ---
  int usable_servers = 5;
  const auto& pool = detail::server_pool();
  for (int i = 0; i < usable_servers; ++i) out.servers.push_back(pool[static_cast<size_t>(i)]);
  for (int i = 0; i < cfg.withheld_servers && usable_servers + i < static_cast<int>(pool.size());
       ++i)
    out.withheld_servers.push_back(pool[static_cast<size_t>(usable_servers + i)]);
  out.filter_lines.push_back("! generated filter rules");
  for (const auto& s : out.servers) out.filter_lines.push_back("||" + s + "^");

  std::vector<std::string> all_servers = out.servers;
  for (const auto& s : out.withheld_servers) all_servers.push_back(s);

  // --- Sites ---
  const auto& bases = detail::site_bases();
  for (int i = 0; i < cfg.sites; ++i) {
    WebsiteSpec w;
    w.domain = bases[static_cast<size_t>(i) % bases.size()] +
               std::to_string(i / static_cast<int>(bases.size()) + 1) + ".example";
    static const int kPlacementChoices[] = {1, 2, 2, 3, 3, 3, 4, 4, 5, 6};
    w.placements = kPlacementChoices[rng.below(10)];
    if (cfg.placement_outlier && i == cfg.sites - 1 && cfg.sites > 2) w.placements = 16;
    w.popularity_rank = i + 1;
    out.catalog.websites.push_back(std::move(w));
  }
  // Category coverage: each target lands on enough sites for persona builds,
  // then pad sites with extra categories.
  if (cfg.category_coverage > 0 && cfg.sites > 0) {
    size_t cursor = 0;
    for (const auto& t : targets) {
      for (int k = 0; k < cfg.category_coverage; ++k) {
        out.catalog.websites[cursor % out.catalog.websites.size()].content_categories.insert(t);
        ++cursor;
      }
    }
    std::vector<std::string> extra_pool;
    for (const auto& n : cfg.tree->nodes()) extra_pool.push_back(n.id);
    std::sort(extra_pool.begin(), extra_pool.end());
    for (auto& w : out.catalog.websites) {
      while (static_cast<int>(w.content_categories.size()) < cfg.site_categories_max &&
             rng.below(3) != 0)
        w.content_categories.insert(extra_pool[rng.below(extra_pool.size())]);
    }
  }

  // --- Advertisers ---
  std::map<std::string, std::vector<size_t>> advertisers_by_category;
  for (int i = 0; i < cfg.advertisers; ++i) {
    AdvertiserSpec a;
    a.domain = "brand" + std::to_string(i + 1) + ".example";
    if (rng.uniform() >= cfg.unranked_fraction)
      a.global_rank = static_cast<int>(
          std::exp(std::log(100.0) + rng.uniform() * (std::log(2e6) - std::log(100.0))));
    if (cfg.untargeted_category_bias > 0 && rng.uniform() < cfg.untargeted_category_bias) {
      a.category = cfg.bias_category;
    } else {
      a.category = canonicals[rng.below(canonicals.size())];
    }
    advertisers_by_category[a.category].push_back(out.catalog.advertisers.size());
    out.catalog.advertisers.push_back(std::move(a));
  }
  auto advertiser_for = [&](const std::string& category) -> const AdvertiserSpec& {
    auto it = advertisers_by_category.find(category);
    if (it != advertisers_by_category.end() && !it->second.empty())
      return out.catalog.advertisers[it->second[rng.below(it->second.size())]];
    return out.catalog.advertisers[rng.below(out.catalog.advertisers.size())];
  };

  // --- Campaigns ---
  const auto& dims = DimensionList::standard().entries();
  std::vector<std::pair<int, int>> dim_list(dims.begin(), dims.end());
  std::vector<double> weight_ranks;
  for (int i = 0; i < cfg.campaigns; ++i) weight_ranks.push_back(i + 1.0);
  rng.shuffle(weight_ranks);

  std::string caps_manifest, targeted_manifest;
  int n_targeted = 0;
  for (int i = 0; i < cfg.campaigns; ++i) {
    Campaign c;
    c.id = "c" + std::to_string(1000 + i);
    bool targeted = rng.uniform() < cfg.targeted_fraction;
    std::string target = targets[rng.below(targets.size())];
    if (targeted) {
      c.targeting.required_interests.insert(target);
      if (rng.uniform() < cfg.demo_fraction) {
        if (rng.below(2)) c.targeting.gender = rng.below(2) ? 'M' : 'F';
        if (rng.below(2) || (!c.targeting.gender))
          c.targeting.age_group = age_groups()[rng.below(age_groups().size())];
      }
      ++n_targeted;
      targeted_manifest += (targeted_manifest.empty() ? "" : ",") + c.id;
      c.advertiser_domain =
          rng.uniform() < 0.8
              ? advertiser_for(CategoryTree::top_level(target)).domain
              : out.catalog.advertisers[rng.below(out.catalog.advertisers.size())].domain;
    } else {
      c.targeting.untargeted = true;
      c.advertiser_domain =
          cfg.untargeted_category_bias > 0
              ? advertiser_for(cfg.bias_category).domain
              : out.catalog.advertisers[rng.below(out.catalog.advertisers.size())].domain;
    }
    const std::string& server = all_servers[rng.below(all_servers.size())];
    c.creative_url = "http://static." + server + "/cr/" + c.id + ".png";
    auto [w, h] = dim_list[rng.below(dim_list.size())];
    c.width = w;
    c.height = h;
    c.weight = 1.0 / std::pow(weight_ranks[static_cast<size_t>(i)], cfg.zipf_exponent);
    if (rng.uniform() < cfg.capped_fraction) {
      static const int kCaps[] = {3, 5, 7, 10, 15, 20};
      c.frequency_cap = kCaps[rng.below(6)];
      caps_manifest += (caps_manifest.empty() ? "" : ",") + c.id + ":" +
                       std::to_string(*c.frequency_cap);
    }
    double r = rng.uniform();
    c.click = r < cfg.direct_fraction
                  ? ClickStyle::Direct
                  : (r < cfg.direct_fraction + cfg.tracker_fraction ? ClickStyle::Tracker
                                                                    : ClickStyle::Opaque);
    out.catalog.campaigns.push_back(std::move(c));
  }

  // Cap plants: dominant weight, untargeted, so every pair sees them until
  // the cap exhausts.
  for (int plant = 0; plant < static_cast<int>(cfg.cap_plants.size()); ++plant) {
    for (int j = 0; j < cfg.capped_per_plant; ++j) {
      Campaign c;
      c.id = "cap" + std::to_string(cfg.cap_plants[static_cast<size_t>(plant)]) + "-" +
             std::to_string(j);
      c.targeting.untargeted = true;
      c.advertiser_domain =
          out.catalog.advertisers[rng.below(out.catalog.advertisers.size())].domain;
      const std::string& server = out.servers[rng.below(out.servers.size())];
      c.creative_url = "http://static." + server + "/cr/" + c.id + ".png";
      auto [w, h] = dim_list[rng.below(dim_list.size())];
      c.width = w;
      c.height = h;
      c.weight = 60.0;  // dominates the zipf pool
      c.frequency_cap = cfg.cap_plants[static_cast<size_t>(plant)];
      c.click = ClickStyle::Tracker;
      caps_manifest += (caps_manifest.empty() ? "" : ",") + c.id + ":" +
                       std::to_string(*c.frequency_cap);
      out.catalog.campaigns.push_back(std::move(c));
    }
  }

  // Premium contracts: two dedicated always-on campaigns on the leading
  // sites.
  std::string premium_manifest;
  for (int s = 0; s < cfg.premium_sites && s < static_cast<int>(out.catalog.websites.size());
       ++s) {
    WebsiteSpec& site = out.catalog.websites[static_cast<size_t>(s)];
    if (site.placements < 2) site.placements = 2;
    const AdvertiserSpec& adv =
        out.catalog.advertisers[rng.below(out.catalog.advertisers.size())];
    for (int k = 0; k < 2; ++k) {
      Campaign c;
      c.id = "prem-" + std::to_string(s) + "-" + std::to_string(k);
      c.targeting.untargeted = true;
      c.advertiser_domain = adv.domain;
      const std::string& server = out.servers[rng.below(out.servers.size())];
      c.creative_url = "http://static." + server + "/cr/" + c.id + ".png";
      auto [w, h] = dim_list[rng.below(dim_list.size())];
      c.width = w;
      c.height = h;
      c.weight = 1.0;  // irrelevant: premium bypasses the pool
      c.click = ClickStyle::Direct;
      out.catalog.campaigns.push_back(c);
      site.premium_campaign_ids.push_back(c.id);
      premium_manifest += (premium_manifest.empty() ? "" : ",") + site.domain + ":" + c.id;
    }
  }

  // --- Category mapping sources (each covers part of the advertisers) ---
  std::string src1, src2, resolution;
  std::set<std::string> raws_done;
  CategoryMapping::Source s1{"sitedir", {}}, s2{"webscan", {}};
  for (const auto& a : out.catalog.advertisers) {
    std::string raw1 = "Directory/" + a.category;
    std::string raw2 = a.category + "/General";
    double r = rng.uniform();
    if (r < 0.45) {
      s1.domain_to_raw[a.domain] = raw1;
      src1 += a.domain + "\t" + raw1 + "\n";
    } else if (r < 0.92) {
      s2.domain_to_raw[a.domain] = raw2;
      src2 += a.domain + "\t" + raw2 + "\n";
    }  // else: unmapped, lands in Unknown
    for (const auto& [raw, canonical] :
         {std::pair{raw1, a.category}, std::pair{raw2, a.category}}) {
      if (raws_done.insert(raw).second) {
        out.mapping.add_resolution(raw, canonical);
        resolution += raw + "\t" + canonical + "\n";
      }
    }
  }
  out.mapping.add_source(std::move(s1));
  out.mapping.add_source(std::move(s2));
  out.mapping_source1_text = src1;
  out.mapping_source2_text = src2;
  out.resolution_text = resolution;

  out.catalog.validate();
  out.catalog.build_indexes();

  out.manifest["seed"] = std::to_string(cfg.seed);
  out.manifest["sites"] = std::to_string(out.catalog.websites.size());
  out.manifest["advertisers"] = std::to_string(out.catalog.advertisers.size());
  out.manifest["campaigns"] = std::to_string(out.catalog.campaigns.size());
  out.manifest["targeted_campaigns"] = std::to_string(n_targeted);
  out.manifest["planted_caps"] = caps_manifest;
  out.manifest["premium"] = premium_manifest;
  out.manifest["withheld_servers"] = join(out.withheld_servers, ",");
  return out;
}

}  // namespace adlens
