#pragma once

// Interest-based personas: built by simulated browsing of category-matched
// sites, contaminated by further visits, resettable to their build-time
// snapshot. A persona is owned by one crawl session at a time.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adlens/catalog.hpp"
#include "adlens/category_tree.hpp"
#include "adlens/rng.hpp"
#include "adlens/text.hpp"

namespace adlens {

inline constexpr const char* kEmptyPersonaId = "EMPTY";

struct Persona {
  std::string id;
  std::string target_category;  // empty string for the EMPTY baseline persona
  std::set<std::string> interests;
  std::optional<char> gender;
  std::optional<std::string> age_group;
  std::set<std::string> initial_snapshot;  // frozen at build time
  std::vector<std::string> visit_history;

  bool is_empty_profile() const { return target_category.empty(); }
};

inline Persona empty_persona() {
  Persona p;
  p.id = kEmptyPersonaId;
  return p;
}

struct InsufficientSites : std::runtime_error {
  InsufficientSites(const std::string& target, size_t have, size_t need)
      : std::runtime_error("only " + std::to_string(have) + " of " + std::to_string(need) +
                           " sites match subtree of " + target) {}
};
struct EmptySample : std::runtime_error {
  EmptySample() : std::runtime_error("empty sample") {}
};

// category id -> demographics; deterministic by construction.
class DemographicsMap {
 public:
  struct Entry {
    std::optional<char> gender;
    std::optional<std::string> age_group;
  };

  void put(const std::string& category, Entry e) { entries_[category] = e; }

  Entry lookup(const std::string& category) const {
    auto it = entries_.find(category);
    return it == entries_.end() ? Entry{} : it->second;
  }

  // File format: category<TAB>gender<TAB>age, '-' for absent.
  static DemographicsMap load_file(const std::filesystem::path& p) {
    DemographicsMap m;
    for (const auto& raw : read_lines(p)) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      auto f = split(line, '\t');
      if (f.size() != 3) throw std::runtime_error("bad demographics line: " + line);
      Entry e;
      if (f[1] != "-") e.gender = f[1].at(0);
      if (f[2] != "-") e.age_group = f[2];
      m.put(f[0], e);
    }
    return m;
  }

 private:
  std::map<std::string, Entry> entries_;
};

// Categories the ecosystem assigns to a visitor of this site.
inline const std::set<std::string>& site_interest_footprint(const WebsiteSpec& website) {
  return website.content_categories;
}

// Visits the top n_sites sites (by popularity rank) whose footprint
// intersects the target's subtree; interests become the union of their
// footprints, which routinely pulls in categories outside the subtree.
inline Persona build_persona(const CategoryTree& tree, const std::string& target,
                             const Catalog& catalog, size_t n_sites = 50,
                             const DemographicsMap& demographics = {}) {
  tree.node(target);  // throws UnknownNode for bad targets
  std::vector<const WebsiteSpec*> matching;
  for (const auto& w : catalog.websites) {
    for (const auto& c : w.content_categories) {
      if (tree.contains(c) && tree.is_relevant(target, c)) {
        matching.push_back(&w);
        break;
      }
    }
  }
  if (matching.size() < n_sites) throw InsufficientSites(target, matching.size(), n_sites);
  std::sort(matching.begin(), matching.end(), [](const WebsiteSpec* a, const WebsiteSpec* b) {
    if (a->popularity_rank != b->popularity_rank) return a->popularity_rank < b->popularity_rank;
    return a->domain < b->domain;
  });
  matching.resize(n_sites);

  Persona p;
  p.id = target;
  p.target_category = target;
  for (const WebsiteSpec* w : matching) {
    const auto& fp = site_interest_footprint(*w);
    p.interests.insert(fp.begin(), fp.end());
    p.visit_history.push_back(w->domain);
  }
  p.initial_snapshot = p.interests;
  auto demo = demographics.lookup(target);
  p.gender = demo.gender;
  p.age_group = demo.age_group;
  return p;
}

// Interest growth caused by crawling itself. Idempotent for a repeated site.
inline void contaminate(Persona& persona, const WebsiteSpec& website) {
  const auto& fp = site_interest_footprint(website);
  persona.interests.insert(fp.begin(), fp.end());
  persona.visit_history.push_back(website.domain);
}

inline void reset_to_snapshot(Persona& persona) {
  persona.interests = persona.initial_snapshot;
  persona.visit_history.clear();
}

// Distribution of per-persona new-category counts after a fixed-length visit
// sequence drawn from `websites`. Keys are gained-category counts; values are
// fractions of the persona sample (sums to 1).
inline std::map<int, double> measure_contamination(const std::vector<Persona>& personas,
                                                   const std::vector<const WebsiteSpec*>& websites,
                                                   size_t visits_per_persona,
                                                   uint64_t seed = 1) {
  if (personas.empty() || websites.empty()) throw EmptySample();
  std::map<int, int> counts;
  for (const auto& original : personas) {
    Persona p = original;
    reset_to_snapshot(p);
    std::vector<const WebsiteSpec*> order = websites;
    Rng rng = Rng::derive({seed, fnv1a64(p.id)});
    rng.shuffle(order);
    for (size_t v = 0; v < visits_per_persona; ++v)
      contaminate(p, *order[v % order.size()]);
    int gained = 0;
    for (const auto& c : p.interests)
      if (!p.initial_snapshot.count(c)) ++gained;
    counts[gained]++;
  }
  std::map<int, double> hist;
  for (const auto& [gain, n] : counts)
    hist[gain] = static_cast<double>(n) / static_cast<double>(personas.size());
  return hist;
}

// --- Persona store -----------------------------------------------------------

inline nlohmann::json persona_to_json(const Persona& p) {
  nlohmann::json j;
  j["id"] = p.id;
  j["target"] = p.target_category;
  j["interests"] = std::vector<std::string>(p.interests.begin(), p.interests.end());
  j["snapshot"] = std::vector<std::string>(p.initial_snapshot.begin(), p.initial_snapshot.end());
  j["history"] = p.visit_history;
  if (p.gender) j["gender"] = std::string(1, *p.gender);
  if (p.age_group) j["age"] = *p.age_group;
  return j;
}

inline Persona persona_from_json(const nlohmann::json& j) {
  Persona p;
  p.id = j.at("id").get<std::string>();
  p.target_category = j.at("target").get<std::string>();
  for (const auto& c : j.at("interests")) p.interests.insert(c.get<std::string>());
  for (const auto& c : j.at("snapshot")) p.initial_snapshot.insert(c.get<std::string>());
  for (const auto& v : j.at("history")) p.visit_history.push_back(v.get<std::string>());
  if (j.contains("gender")) p.gender = j["gender"].get<std::string>().at(0);
  if (j.contains("age")) p.age_group = j["age"].get<std::string>();
  return p;
}

// One record per line; reload round-trips exactly.
inline void save_personas(const std::vector<Persona>& personas,
                          const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : personas) out += persona_to_json(p).dump() + "\n";
  write_file(path, out);
}

inline std::vector<Persona> load_personas(const std::filesystem::path& path) {
  std::vector<Persona> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    out.push_back(persona_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace adlens
