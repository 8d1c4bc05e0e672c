#pragma once

// Publisher/advertiser/campaign catalog: the immutable half of the simulated
// ad ecosystem. Serialized as tagged lines (site|advertiser|campaign), one
// record per line, TAB-separated; see README for the schema.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "adlens/text.hpp"

namespace adlens {

inline const std::vector<std::string>& age_groups() {
  static const std::vector<std::string> groups = {"18-24", "25-34", "35-44", "45-54", "55+"};
  return groups;
}

struct WebsiteSpec {
  std::string domain;
  int placements = 1;  // ad slots per page, 1..16
  int popularity_rank = 1;
  std::set<std::string> content_categories;  // taxonomy node ids
  std::vector<std::string> premium_campaign_ids;
};

struct AdvertiserSpec {
  std::string domain;
  std::optional<int> global_rank;  // absent allowed
  std::string category;            // taxonomy node id
};

struct TargetingPredicate {
  bool untargeted = false;
  std::set<std::string> required_interests;  // match = non-empty intersection
  std::optional<char> gender;                // 'M' / 'F'
  std::optional<std::string> age_group;

  template <typename InterestSet>
  bool matches(const InterestSet& interests, std::optional<char> persona_gender,
               const std::optional<std::string>& persona_age) const {
    if (untargeted) return true;
    if (!required_interests.empty()) {
      bool hit = false;
      for (const auto& c : required_interests)
        if (interests.count(c)) { hit = true; break; }
      if (!hit) return false;
    }
    if (gender && (!persona_gender || *persona_gender != *gender)) return false;
    if (age_group && (!persona_age || *persona_age != *age_group)) return false;
    return true;
  }

  std::string encode() const {
    if (untargeted) return "untargeted";
    std::vector<std::string> parts;
    if (!required_interests.empty()) {
      std::vector<std::string> is(required_interests.begin(), required_interests.end());
      parts.push_back("interests=" + join(is, ","));
    }
    if (gender) parts.push_back(std::string("gender=") + *gender);
    if (age_group) parts.push_back("age=" + *age_group);
    return join(parts, ";");
  }

  static TargetingPredicate decode(const std::string& s) {
    TargetingPredicate t;
    if (s == "untargeted") {
      t.untargeted = true;
      return t;
    }
    for (const auto& part : split(s, ';')) {
      size_t eq = part.find('=');
      if (eq == std::string::npos) throw std::runtime_error("bad targeting field: " + part);
      std::string key = part.substr(0, eq), val = part.substr(eq + 1);
      if (key == "interests") {
        for (const auto& c : split(val, ',')) t.required_interests.insert(c);
      } else if (key == "gender") {
        t.gender = val.at(0);
      } else if (key == "age") {
        t.age_group = val;
      } else {
        throw std::runtime_error("bad targeting key: " + key);
      }
    }
    return t;
  }
};

// How a campaign's click URL reaches the advertiser: a direct link, a
// redirecting tracker with the destination recoverable from the query string,
// or an opaque tracker (nothing recoverable if the fetch is blocked).
enum class ClickStyle { Direct, Tracker, Opaque };

inline std::string to_string(ClickStyle s) {
  switch (s) {
    case ClickStyle::Direct: return "direct";
    case ClickStyle::Tracker: return "tracker";
    case ClickStyle::Opaque: return "opaque";
  }
  return "direct";
}

inline ClickStyle click_style_from(const std::string& s) {
  if (s == "direct") return ClickStyle::Direct;
  if (s == "tracker") return ClickStyle::Tracker;
  if (s == "opaque") return ClickStyle::Opaque;
  throw std::runtime_error("bad click style: " + s);
}

struct Campaign {
  std::string id;
  std::string advertiser_domain;
  std::string creative_url;  // distinct-ad identity key
  int width = 0;
  int height = 0;
  double weight = 1.0;
  std::optional<int> frequency_cap;  // per-persona impression limit
  TargetingPredicate targeting;
  ClickStyle click = ClickStyle::Direct;
};

class Catalog {
 public:
  std::vector<WebsiteSpec> websites;
  std::vector<AdvertiserSpec> advertisers;
  std::vector<Campaign> campaigns;

  void validate() const {
    std::unordered_map<std::string, int> seen;
    for (const auto& w : websites) {
      if (w.placements < 1 || w.placements > 16)
        throw std::runtime_error("placements out of range for " + w.domain);
      if (seen[w.domain]++) throw std::runtime_error("duplicate site: " + w.domain);
    }
    seen.clear();
    for (const auto& a : advertisers)
      if (seen[a.domain]++) throw std::runtime_error("duplicate advertiser: " + a.domain);
    std::unordered_map<std::string, int> adv;
    for (size_t i = 0; i < advertisers.size(); ++i) adv[advertisers[i].domain] = 1;
    seen.clear();
    for (const auto& c : campaigns) {
      if (seen[c.id]++) throw std::runtime_error("duplicate campaign: " + c.id);
      if (!adv.count(c.advertiser_domain))
        throw std::runtime_error("campaign " + c.id + " references unknown advertiser");
      if (c.weight <= 0) throw std::runtime_error("non-positive weight: " + c.id);
      if (c.width <= 0 || c.height <= 0) throw std::runtime_error("bad creative size: " + c.id);
      if (c.frequency_cap && *c.frequency_cap <= 0)
        throw std::runtime_error("non-positive frequency cap: " + c.id);
      if (c.targeting.untargeted &&
          (!c.targeting.required_interests.empty() || c.targeting.gender || c.targeting.age_group))
        throw std::runtime_error("untargeted campaign with targeting fields: " + c.id);
    }
    std::unordered_map<std::string, int> camp;
    for (const auto& c : campaigns) camp[c.id] = 1;
    for (const auto& w : websites)
      for (const auto& pid : w.premium_campaign_ids)
        if (!camp.count(pid))
          throw std::runtime_error("premium campaign " + pid + " missing for " + w.domain);
  }

  const WebsiteSpec* find_website(const std::string& domain) const {
    for (const auto& w : websites)
      if (w.domain == domain) return &w;
    return nullptr;
  }
  const Campaign* find_campaign(const std::string& id) const {
    auto it = campaign_index_.find(id);
    if (it != campaign_index_.end()) return &campaigns[it->second];
    for (size_t i = 0; i < campaigns.size(); ++i)
      if (campaigns[i].id == id) return &campaigns[i];
    return nullptr;
  }
  const AdvertiserSpec* find_advertiser(const std::string& domain) const {
    for (const auto& a : advertisers)
      if (a.domain == domain) return &a;
    return nullptr;
  }

  void build_indexes() {
    campaign_index_.clear();
    for (size_t i = 0; i < campaigns.size(); ++i) campaign_index_[campaigns[i].id] = i;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& w : websites) {
      std::vector<std::string> cats(w.content_categories.begin(), w.content_categories.end());
      out += "site\t" + w.domain + "\t" + std::to_string(w.placements) + "\t" +
             std::to_string(w.popularity_rank) + "\t" + (cats.empty() ? "-" : join(cats, ",")) +
             "\t" + (w.premium_campaign_ids.empty() ? "-" : join(w.premium_campaign_ids, ",")) +
             "\n";
    }
    for (const auto& a : advertisers) {
      out += "advertiser\t" + a.domain + "\t" +
             (a.global_rank ? std::to_string(*a.global_rank) : "-") + "\t" + a.category + "\n";
    }
    for (const auto& c : campaigns) {
      out += "campaign\t" + c.id + "\t" + c.advertiser_domain + "\t" + c.creative_url + "\t" +
             std::to_string(c.width) + "\t" + std::to_string(c.height) + "\t" +
             format_weight(c.weight) + "\t" +
             (c.frequency_cap ? std::to_string(*c.frequency_cap) : "-") + "\t" +
             c.targeting.encode() + "\t" + to_string(c.click) + "\n";
    }
    return out;
  }

  static Catalog parse(const std::vector<std::string>& lines) {
    Catalog cat;
    for (const auto& raw : lines) {
      if (raw.empty() || raw[0] == '#') continue;
      auto f = split(raw, '\t');
      if (f[0] == "site") {
        if (f.size() != 6) throw std::runtime_error("bad site record: " + raw);
        WebsiteSpec w;
        w.domain = f[1];
        w.placements = std::stoi(f[2]);
        w.popularity_rank = std::stoi(f[3]);
        if (f[4] != "-")
          for (const auto& c : split(f[4], ',')) w.content_categories.insert(c);
        if (f[5] != "-") w.premium_campaign_ids = split(f[5], ',');
        cat.websites.push_back(std::move(w));
      } else if (f[0] == "advertiser") {
        if (f.size() != 4) throw std::runtime_error("bad advertiser record: " + raw);
        AdvertiserSpec a;
        a.domain = f[1];
        if (f[2] != "-") a.global_rank = std::stoi(f[2]);
        a.category = f[3];
        cat.advertisers.push_back(std::move(a));
      } else if (f[0] == "campaign") {
        if (f.size() != 10) throw std::runtime_error("bad campaign record: " + raw);
        Campaign c;
        c.id = f[1];
        c.advertiser_domain = f[2];
        c.creative_url = f[3];
        c.width = std::stoi(f[4]);
        c.height = std::stoi(f[5]);
        c.weight = std::stod(f[6]);
        if (f[7] != "-") c.frequency_cap = std::stoi(f[7]);
        c.targeting = TargetingPredicate::decode(f[8]);
        c.click = click_style_from(f[9]);
        cat.campaigns.push_back(std::move(c));
      } else {
        throw std::runtime_error("unknown catalog record tag: " + f[0]);
      }
    }
    cat.validate();
    cat.build_indexes();
    return cat;
  }

  static Catalog load_file(const std::filesystem::path& p) { return parse(read_lines(p)); }
  void save_file(const std::filesystem::path& p) const { write_file(p, serialize()); }

 private:
  static std::string format_weight(double w) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", w);
    return buf;
  }
  std::unordered_map<std::string, size_t> campaign_index_;
};

}  // namespace adlens
