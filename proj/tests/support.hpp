#pragma once

// Shared fixture builders for the test suites.

#include <filesystem>
#include <string>
#include <vector>

#include "adlens/catalog.hpp"
#include "adlens/category_tree.hpp"
#include "adlens/filter_list.hpp"
#include "adlens/persona.hpp"

namespace testsupport {

using namespace adlens;

inline const CategoryTree& taxonomy() {
  static const CategoryTree tree =
      CategoryTree::load_file(std::string(ADLENS_DATA_DIR) + "/taxonomy.tsv");
  return tree;
}

inline WebsiteSpec site(std::string domain, int placements, int rank,
                        std::set<std::string> cats = {},
                        std::vector<std::string> premium = {}) {
  WebsiteSpec w;
  w.domain = std::move(domain);
  w.placements = placements;
  w.popularity_rank = rank;
  w.content_categories = std::move(cats);
  w.premium_campaign_ids = std::move(premium);
  return w;
}

inline AdvertiserSpec advertiser(std::string domain, std::optional<int> rank = 1000,
                                 std::string category = "Shopping") {
  AdvertiserSpec a;
  a.domain = std::move(domain);
  a.global_rank = rank;
  a.category = std::move(category);
  return a;
}

struct CampaignOpts {
  double weight = 1.0;
  std::optional<int> cap;
  TargetingPredicate targeting = [] {
    TargetingPredicate t;
    t.untargeted = true;
    return t;
  }();
  ClickStyle click = ClickStyle::Direct;
  int width = 300;
  int height = 250;
  std::string server = "nexus-ads.example";
};

inline Campaign campaign(std::string id, std::string advertiser_domain,
                         CampaignOpts opts = {}) {
  Campaign c;
  c.id = std::move(id);
  c.advertiser_domain = std::move(advertiser_domain);
  c.creative_url = "http://static." + opts.server + "/cr/" + c.id + ".png";
  c.width = opts.width;
  c.height = opts.height;
  c.weight = opts.weight;
  c.frequency_cap = opts.cap;
  c.targeting = opts.targeting;
  c.click = opts.click;
  return c;
}

inline TargetingPredicate interest_targeting(std::set<std::string> interests) {
  TargetingPredicate t;
  t.required_interests = std::move(interests);
  return t;
}

inline FilterList server_filters(const std::vector<std::string>& servers = {
                                     "nexus-ads.example"}) {
  std::vector<std::string> lines;
  for (const auto& s : servers) lines.push_back("||" + s + "^");
  return FilterList::parse(lines);
}

inline Persona persona_with(const std::string& id, std::set<std::string> interests,
                            std::optional<char> gender = {},
                            std::optional<std::string> age = {}) {
  Persona p;
  p.id = id;
  p.target_category = interests.empty() ? "" : *interests.begin();
  p.interests = interests;
  p.initial_snapshot = std::move(interests);
  p.gender = gender;
  p.age_group = age;
  return p;
}

// Unique scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "adlens-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
