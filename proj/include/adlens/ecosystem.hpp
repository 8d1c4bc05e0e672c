#pragma once

// Deterministic, seedable ad-ecosystem simulator. Serves pages for (website,
// persona) visits: premium contracts occupy their fixed slots, remaining
// slots are filled by weight-proportional sampling without replacement over
// campaigns whose targeting matches the persona and whose per-persona
// frequency counter is below cap. Every render is labeled, so downstream
// classifiers and estimators can be scored against exact ground truth.
//
// Randomness for a render is drawn from a stream named (seed, website, slot,
// per-pair render ordinal). It does not depend on the persona or on renders
// of other pairs, so concurrent crawls replay identically as long as each
// persona's own visits stay ordered.

#include <cassert>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "adlens/catalog.hpp"
#include "adlens/landing.hpp"
#include "adlens/page.hpp"
#include "adlens/persona.hpp"
#include "adlens/rng.hpp"
#include "adlens/text.hpp"

namespace adlens {

struct UnknownWebsite : std::runtime_error {
  explicit UnknownWebsite(const std::string& d) : std::runtime_error("unknown website: " + d) {}
};
struct UnknownPage : std::runtime_error {
  explicit UnknownPage(const std::string& u) : std::runtime_error("page not rendered here: " + u) {}
};

// Final advertiser URL an ad click settles on.
inline std::string campaign_landing_final(const Campaign& c) {
  return "http://" + c.advertiser_domain + "/offers/" + c.id;
}

// Host of the ad server that delivers the creative, minus its first label
// ("static.nexus-ads.example" -> "nexus-ads.example").
inline std::string campaign_server(const Campaign& c) {
  std::string host = url_host(c.creative_url);
  size_t dot = host.find('.');
  return dot == std::string::npos ? host : host.substr(dot + 1);
}

// Click URL placed on the ad's anchor. Trackers redirect to the advertiser;
// opaque trackers carry nothing recoverable from the query string.
inline std::string campaign_click_url(const Campaign& c) {
  switch (c.click) {
    case ClickStyle::Direct:
      return campaign_landing_final(c);
    case ClickStyle::Tracker:
      return "http://click." + campaign_server(c) + "/c?cid=" + c.id +
             "&u=" + percent_encode(campaign_landing_final(c));
    case ClickStyle::Opaque: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(fnv1a64(c.id)));
      return "http://click." + campaign_server(c) + "/c?cid=" + c.id + "&tok=" + buf;
    }
  }
  return campaign_landing_final(c);
}

struct PageLabel {
  std::string element_id;
  std::string campaign_id;  // empty for decoys and house fills
};

struct GroundTruth {
  std::set<std::string> ad_element_ids;
  std::map<std::string, std::string> campaign_by_element;
};

class EcosystemState {
 public:
  EcosystemState(const Catalog& catalog, uint64_t seed)
      : catalog_(&catalog), seed_(seed) {
    for (size_t i = 0; i < catalog.websites.size(); ++i)
      website_index_[catalog.websites[i].domain] = i;
  }

  EcosystemState(const EcosystemState&) = delete;
  EcosystemState& operator=(const EcosystemState&) = delete;

  const Catalog& catalog() const { return *catalog_; }
  uint64_t seed() const { return seed_; }
  uint64_t visits() const { return t_; }

  // Keep per-render labels for ground_truth(). Disable only for very large
  // sweeps that never ask for labels.
  void set_keep_ground_truth(bool keep) { keep_ground_truth_ = keep; }

  PageDocument render_page(const std::string& website_domain, const Persona& persona,
                           int visit_index) {
    std::lock_guard lock(mu_);
    if (visit_index < 1) throw std::invalid_argument("visit_index must be >= 1");
    auto wit = website_index_.find(website_domain);
    if (wit == website_index_.end()) throw UnknownWebsite(website_domain);
    const WebsiteSpec& site = catalog_->websites[wit->second];

    uint32_t persona_idx = intern_persona(persona.id);
    uint64_t pair_key = (static_cast<uint64_t>(wit->second) << 32) | persona_idx;
    uint64_t seq = ++pair_seq_[pair_key];
    ++t_;

    std::string page_url = "http://" + site.domain + "/?p=" + percent_encode(persona.id) +
                           "&n=" + std::to_string(seq);

    // Slot fills: premium contracts first, then the weighted pool.
    std::vector<const Campaign*> slot_fill(static_cast<size_t>(site.placements), nullptr);
    std::set<std::string> placed;
    size_t next_slot = 0;
    for (const auto& pid : site.premium_campaign_ids) {
      if (next_slot >= slot_fill.size()) break;
      const Campaign* c = catalog_->find_campaign(pid);
      if (!c || placed.count(c->id)) continue;
      if (!under_cap(*c, persona_idx)) continue;
      slot_fill[next_slot++] = c;
      placed.insert(c->id);
    }

    std::vector<const Campaign*> pool;
    std::vector<double> weights;
    for (const auto& c : catalog_->campaigns) {
      if (placed.count(c.id)) continue;
      if (!under_cap(c, persona_idx)) continue;
      if (!c.targeting.matches(persona.interests, persona.gender, persona.age_group)) continue;
      pool.push_back(&c);
      weights.push_back(c.weight);
    }

    for (size_t slot = next_slot; slot < slot_fill.size(); ++slot) {
      if (pool.empty()) break;  // NoEligibleCampaign: house fill below
      Rng rng = Rng::derive({seed_, fnv1a64(site.domain), static_cast<uint64_t>(slot), seq});
      size_t pick = rng.pick_weighted(weights);
      slot_fill[slot] = pool[pick];
      pool.erase(pool.begin() + static_cast<long>(pick));
      weights.erase(weights.begin() + static_cast<long>(pick));
    }

    for (const Campaign* c : slot_fill) {
      if (!c) continue;
      int& count = counters_[counter_key(*c, persona_idx)];
      ++count;
      assert(!c->frequency_cap || count <= *c->frequency_cap);
    }

    // Decoys: 1-3 content images; some fail the dimension test, some only the
    // self-ad test, so every classifier step has negatives.
    Rng decoy_rng = Rng::derive({seed_, fnv1a64(site.domain), 0xdecce5ULL, seq});
    int n_decoys = static_cast<int>(1 + decoy_rng.below(3));

    PageDocument page = build_page(site, page_url, slot_fill, n_decoys, decoy_rng);

    if (keep_ground_truth_) {
      std::vector<PageLabel>& labels = labels_[page_url];
      labels.clear();
      int el = 0;
      for (const Campaign* c : slot_fill)
        labels.push_back({element_id(el++), c ? c->id : std::string{}});
      for (int d = 0; d < n_decoys; ++d) labels.push_back({element_id(el++), ""});
    }
    return page;
  }

  // Exact labeling of a page produced by render_page; decoys and house fills
  // excluded.
  GroundTruth ground_truth(const PageDocument& page) const {
    std::lock_guard lock(mu_);
    auto it = labels_.find(page.url);
    if (it == labels_.end()) throw UnknownPage(page.url);
    GroundTruth gt;
    for (const auto& label : it->second) {
      if (label.campaign_id.empty()) continue;
      gt.ad_element_ids.insert(label.element_id);
      gt.campaign_by_element[label.element_id] = label.campaign_id;
    }
    return gt;
  }

  int impression_count(const std::string& campaign_id, const std::string& persona_id) const {
    std::lock_guard lock(mu_);
    const Campaign* c = catalog_->find_campaign(campaign_id);
    auto pit = persona_index_.find(persona_id);
    if (!c || pit == persona_index_.end()) return 0;
    auto it = counters_.find(counter_key(*c, pit->second));
    return it == counters_.end() ? 0 : it->second;
  }

  // (campaign id, persona id) -> count snapshot, for whole-run assertions.
  std::map<std::pair<std::string, std::string>, int> counter_snapshot() const {
    std::lock_guard lock(mu_);
    std::map<std::pair<std::string, std::string>, int> out;
    std::vector<std::string> persona_by_idx(persona_index_.size());
    for (const auto& [pid, idx] : persona_index_) persona_by_idx[idx] = pid;
    for (const auto& [key, count] : counters_) {
      size_t campaign_idx = key >> 32;
      uint32_t persona_idx = static_cast<uint32_t>(key & 0xffffffffULL);
      out[{catalog_->campaigns[campaign_idx].id, persona_by_idx[persona_idx]}] = count;
    }
    return out;
  }

 private:
  static std::string element_id(int n) { return "el-" + std::to_string(n); }

  uint32_t intern_persona(const std::string& id) {
    auto it = persona_index_.find(id);
    if (it != persona_index_.end()) return it->second;
    uint32_t idx = static_cast<uint32_t>(persona_index_.size());
    persona_index_.emplace(id, idx);
    return idx;
  }

  uint64_t counter_key(const Campaign& c, uint32_t persona_idx) const {
    size_t campaign_idx = static_cast<size_t>(&c - catalog_->campaigns.data());
    return (static_cast<uint64_t>(campaign_idx) << 32) | persona_idx;
  }

  bool under_cap(const Campaign& c, uint32_t persona_idx) {
    if (!c.frequency_cap) return true;
    auto it = counters_.find(counter_key(c, persona_idx));
    return it == counters_.end() || it->second < *c.frequency_cap;
  }

  PageDocument build_page(const WebsiteSpec& site, const std::string& page_url,
                          const std::vector<const Campaign*>& slot_fill, int n_decoys,
                          Rng& decoy_rng) const {
    PageDocument page;
    page.url = page_url;
    page.domain = site.domain;
    auto body = std::make_unique<PageElement>();
    body->tag = "body";

    int el = 0;
    for (size_t slot = 0; slot < slot_fill.size(); ++slot) {
      const Campaign* c = slot_fill[slot];
      auto div = std::make_unique<PageElement>();
      div->tag = "div";
      div->attributes = {{"class", "ad-slot slot-" + std::to_string(slot)}};
      if (c) {
        auto iframe = std::make_unique<PageElement>();
        iframe->tag = "iframe";
        iframe->attributes = {{"src", "http://serve." + campaign_server(*c) +
                                          "/frame?cid=" + c->id +
                                          "&slot=" + std::to_string(slot)}};
        auto anchor = std::make_unique<PageElement>();
        anchor->tag = "a";
        anchor->attributes = {{"href", campaign_click_url(*c)}};
        auto img = std::make_unique<PageElement>();
        img->tag = "img";
        img->attributes = {{"id", element_id(el)},
                           {"src", c->creative_url},
                           {"width", std::to_string(c->width)},
                           {"height", std::to_string(c->height)}};
        anchor->children.push_back(std::move(img));
        iframe->children.push_back(std::move(anchor));
        div->children.push_back(std::move(iframe));
      } else {
        // House fill: standard size but same-domain link, so it fails the
        // self-ad test.
        auto anchor = std::make_unique<PageElement>();
        anchor->tag = "a";
        anchor->attributes = {{"href", "http://" + site.domain + "/subscribe"}};
        auto img = std::make_unique<PageElement>();
        img->tag = "img";
        img->attributes = {{"id", element_id(el)},
                           {"src", "http://" + site.domain + "/house/promo.png"},
                           {"width", "300"},
                           {"height", "250"}};
        anchor->children.push_back(std::move(img));
        div->children.push_back(std::move(anchor));
      }
      ++el;
      body->children.push_back(std::move(div));
    }

    auto content = std::make_unique<PageElement>();
    content->tag = "div";
    content->attributes = {{"class", "content"}};
    for (int d = 0; d < n_decoys; ++d) {
      uint64_t photo = decoy_rng.below(100000);
      bool standard_size = decoy_rng.below(2) == 0;  // then same-domain link is the tell
      bool external_link = !standard_size && decoy_rng.below(4) == 0;
      auto anchor = std::make_unique<PageElement>();
      anchor->tag = "a";
      anchor->attributes = {{"href", external_link
                                         ? "http://photos.stockpix.example/g/" +
                                               std::to_string(photo)
                                         : "http://" + site.domain + "/story/" +
                                               std::to_string(photo)}};
      auto img = std::make_unique<PageElement>();
      img->tag = "img";
      int w = standard_size ? 300 : 640 + static_cast<int>(decoy_rng.below(37));
      int h = standard_size ? 250 : 400 + static_cast<int>(decoy_rng.below(29));
      img->attributes = {{"id", element_id(el)},
                         {"src", "http://" + site.domain + "/img/photo-" +
                                     std::to_string(photo) + ".jpg"},
                         {"width", std::to_string(w)},
                         {"height", std::to_string(h)}};
      ++el;
      anchor->children.push_back(std::move(img));
      content->children.push_back(std::move(anchor));
    }
    body->children.push_back(std::move(content));
    page.root->children.push_back(std::move(body));
    return page;
  }

  const Catalog* catalog_;
  uint64_t seed_;
  bool keep_ground_truth_ = true;
  uint64_t t_ = 0;
  mutable std::mutex mu_;
  std::unordered_map<std::string, size_t> website_index_;
  std::unordered_map<std::string, uint32_t> persona_index_;
  std::unordered_map<uint64_t, uint64_t> pair_seq_;
  std::unordered_map<uint64_t, int> counters_;
  std::unordered_map<std::string, std::vector<PageLabel>> labels_;
};

// --- Simulated redirect transport ---------------------------------------------

// Resolves simulator click URLs through their redirect chains. A configurable
// fraction of click URLs is "blocked" (deterministically by URL), modeling
// landing fetches that never connect.
class SimRedirectFetcher : public RedirectFetcher {
 public:
  SimRedirectFetcher(const Catalog& catalog, uint64_t seed, double block_rate = 0.0)
      : catalog_(&catalog), seed_(seed), block_rate_(block_rate) {
    for (const auto& c : catalog.campaigns) {
      by_click_[campaign_click_url(c)] = &c;
      by_final_[campaign_landing_final(c)] = &c;
      by_mid_["http://go." + campaign_server(c) + "/r?cid=" + c.id] = &c;
    }
  }

  RedirectStep fetch(const std::string& url) override {
    auto click = by_click_.find(url);
    if (click != by_click_.end()) {
      if (blocked(url)) return {RedirectStep::Kind::Blocked, ""};
      const Campaign& c = *click->second;
      if (c.click == ClickStyle::Direct) return {RedirectStep::Kind::Final, ""};
      return {RedirectStep::Kind::Redirect, "http://go." + campaign_server(c) + "/r?cid=" + c.id};
    }
    auto mid = by_mid_.find(url);
    if (mid != by_mid_.end())
      return {RedirectStep::Kind::Redirect, campaign_landing_final(*mid->second)};
    if (by_final_.count(url)) return {RedirectStep::Kind::Final, ""};
    // Unknown URL: treat as a page that simply loads.
    return {RedirectStep::Kind::Final, ""};
  }

  bool blocked(const std::string& url) const {
    if (block_rate_ <= 0) return false;
    return Rng::derive({seed_, 0xb10cULL, fnv1a64(url)}).uniform() < block_rate_;
  }

 private:
  const Catalog* catalog_;
  uint64_t seed_;
  double block_rate_;
  std::unordered_map<std::string, const Campaign*> by_click_;
  std::unordered_map<std::string, const Campaign*> by_mid_;
  std::unordered_map<std::string, const Campaign*> by_final_;
};

}  // namespace adlens
