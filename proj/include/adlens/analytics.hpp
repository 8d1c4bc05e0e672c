#pragma once

// Impression-log analyses: per-website targeting detection (Pearson chi-
// squared against visit-proportional expectations), demographic targeting,
// frequency-cap estimation, placement and advertiser-per-page distributions,
// advertiser rank curves, contribution curves, and the profile-by-ad-category
// heat map. Everything here is a pure function of the log.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "adlens/category_map.hpp"
#include "adlens/category_tree.hpp"
#include "adlens/controller.hpp"
#include "adlens/persona.hpp"
#include "adlens/stats.hpp"

namespace adlens {

struct TooFewPersonas : std::runtime_error {
  explicit TooFewPersonas(const std::string& w)
      : std::runtime_error("fewer than two personas visited " + w) {}
};
struct InsufficientPairs : std::runtime_error {
  InsufficientPairs(const std::string& w, size_t have, size_t need)
      : std::runtime_error(w + " appears in " + std::to_string(have) + " pairs, need " +
                           std::to_string(need)) {}
};

// A page view is one (pair, strategy, repetition, visit) render.
using PageViewKey = std::tuple<std::string, std::string, std::string, int, int>;

inline PageViewKey page_view_key(const ImpressionRecord& r) {
  return {r.website, r.persona, r.strategy, r.repetition, r.visit};
}

// --- Targeting ---------------------------------------------------------------

struct TargetingOutcome {
  double chi2 = 0;
  int dof = 0;
  double p_value = 1;
  bool targeted = false;
  bool low_expected = false;  // any expected cell < 5; still computed
  long long total_shows = 0;
};

// Empirical per-persona show distribution for a website's ads. Counts index
// into `personas` (that website's visitor universe, sorted).
struct TargetingTable {
  std::string website;
  std::vector<std::string> personas;
  std::vector<double> persona_visits;               // page views per persona
  std::map<std::string, std::vector<double>> counts;  // ad -> per-persona shows
};

inline TargetingTable build_targeting_table(const std::vector<ImpressionRecord>& log,
                                            const std::string& website) {
  TargetingTable t;
  t.website = website;
  std::set<PageViewKey> views;
  std::map<std::string, long long> visits_by_persona;
  for (const auto& r : log) {
    if (r.website != website) continue;
    if (views.insert(page_view_key(r)).second) visits_by_persona[r.persona]++;
  }
  for (const auto& [p, n] : visits_by_persona) {
    t.personas.push_back(p);
    t.persona_visits.push_back(static_cast<double>(n));
  }
  std::map<std::string, size_t> persona_idx;
  for (size_t i = 0; i < t.personas.size(); ++i) persona_idx[t.personas[i]] = i;
  for (const auto& r : log) {
    if (r.website != website || !r.classification.is_ad || !r.ad_id) continue;
    auto& row = t.counts[*r.ad_id];
    if (row.empty()) row.assign(t.personas.size(), 0.0);
    row[persona_idx.at(r.persona)] += 1.0;
  }
  return t;
}

// Chi-squared uniformity test per ad. Expected counts are proportional to
// each persona's visit count (uniform when visits are balanced); targeted
// means p < threshold.
inline std::map<std::string, TargetingOutcome> targeting_test(
    const std::vector<ImpressionRecord>& log, const std::string& website,
    double threshold = 0.05) {
  TargetingTable t = build_targeting_table(log, website);
  if (t.personas.size() < 2) throw TooFewPersonas(website);
  double total_visits = 0;
  for (double v : t.persona_visits) total_visits += v;
  std::map<std::string, TargetingOutcome> out;
  for (const auto& [ad, observed] : t.counts) {
    double total = 0;
    for (double o : observed) total += o;
    std::vector<double> expected(observed.size());
    for (size_t i = 0; i < observed.size(); ++i)
      expected[i] = total * t.persona_visits[i] / total_visits;
    Chi2Result r = chi2_test(observed, expected);
    TargetingOutcome o;
    o.chi2 = r.statistic;
    o.dof = r.dof;
    o.p_value = r.p_value;
    o.targeted = r.p_value < threshold;
    o.low_expected = r.low_expected;
    o.total_shows = static_cast<long long>(total);
    out.emplace(ad, o);
  }
  return out;
}

enum class TargetAttribute { Profile, Gender, Age };

inline std::string to_string(TargetAttribute a) {
  switch (a) {
    case TargetAttribute::Profile: return "profile";
    case TargetAttribute::Gender: return "gender";
    case TargetAttribute::Age: return "age";
  }
  return "profile";
}

// Fraction of a website's distinct ads whose show distribution over the
// attribute groups rejects the visit-proportional expectation. For gender and
// age, personas lacking either demographic attribute are dropped (the EMPTY
// baseline always is).
inline double targeted_fraction(const std::vector<ImpressionRecord>& log,
                                const std::string& website, TargetAttribute attribute,
                                const std::map<std::string, Persona>& personas,
                                size_t min_pairs = 10, double threshold = 0.05) {
  std::set<std::string> pair_personas;
  for (const auto& r : log)
    if (r.website == website) pair_personas.insert(r.persona);
  if (pair_personas.size() < min_pairs)
    throw InsufficientPairs(website, pair_personas.size(), min_pairs);

  if (attribute == TargetAttribute::Profile) {
    auto tests = targeting_test(log, website, threshold);
    if (tests.empty()) return 0.0;
    size_t targeted = 0;
    for (const auto& [ad, o] : tests)
      if (o.targeted) ++targeted;
    return static_cast<double>(targeted) / static_cast<double>(tests.size());
  }

  TargetingTable t = build_targeting_table(log, website);
  // Group personas by the attribute value; personas must carry both
  // demographics to be included.
  std::map<std::string, size_t> group_idx;
  std::vector<int> group_of(t.personas.size(), -1);
  std::vector<double> group_visits;
  for (size_t i = 0; i < t.personas.size(); ++i) {
    auto it = personas.find(t.personas[i]);
    if (it == personas.end()) continue;
    const Persona& p = it->second;
    if (!p.gender || !p.age_group) continue;
    std::string key = attribute == TargetAttribute::Gender ? std::string(1, *p.gender)
                                                           : *p.age_group;
    auto [git, inserted] = group_idx.try_emplace(key, group_idx.size());
    if (inserted) group_visits.push_back(0);
    group_of[i] = static_cast<int>(git->second);
    group_visits[git->second] += t.persona_visits[i];
  }
  if (group_idx.size() < 2) throw TooFewPersonas(website);
  double total_visits = 0;
  for (double v : group_visits) total_visits += v;

  size_t tested = 0, targeted = 0;
  for (const auto& [ad, counts] : t.counts) {
    std::vector<double> observed(group_idx.size(), 0.0);
    double total = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
      if (group_of[i] < 0) continue;
      observed[static_cast<size_t>(group_of[i])] += counts[i];
      total += counts[i];
    }
    if (total <= 0) continue;  // seen only by excluded personas
    std::vector<double> expected(observed.size());
    for (size_t g = 0; g < observed.size(); ++g)
      expected[g] = total * group_visits[g] / total_visits;
    ++tested;
    if (chi2_test(observed, expected).p_value < threshold) ++targeted;
  }
  if (tested == 0) return 0.0;
  return static_cast<double>(targeted) / static_cast<double>(tested);
}

// --- Frequency caps ------------------------------------------------------------

struct FrequencyCapEstimate {
  std::string ad_id;
  int empirical_frequency = 0;  // max per-pair show count
  int support = 0;              // pairs attaining it
  bool accepted = false;
};

// An ad has an empirical cap when enough pairs hit the same per-pair maximum.
// Excluded: ads shown at most once to any pair, and ads shown at almost every
// visit of an attaining pair (>= `almost_every` of its page views).
inline std::vector<FrequencyCapEstimate> estimate_frequency_caps(
    const std::vector<ImpressionRecord>& log, int c_const = 5, double almost_every = 0.9) {
  std::map<PairKey, long long> pair_visits;
  std::set<PageViewKey> views;
  std::map<std::string, std::map<PairKey, int>> shows;
  for (const auto& r : log) {
    if (views.insert(page_view_key(r)).second) pair_visits[{r.website, r.persona}]++;
    if (r.classification.is_ad && r.ad_id) shows[*r.ad_id][{r.website, r.persona}]++;
  }
  std::vector<FrequencyCapEstimate> out;
  for (const auto& [ad, by_pair] : shows) {
    FrequencyCapEstimate e;
    e.ad_id = ad;
    for (const auto& [pair, n] : by_pair) e.empirical_frequency = std::max(e.empirical_frequency, n);
    bool capped_every_visit = false;
    for (const auto& [pair, n] : by_pair) {
      if (n != e.empirical_frequency) continue;
      ++e.support;
      if (static_cast<double>(n) >=
          almost_every * static_cast<double>(pair_visits.at(pair)))
        capped_every_visit = true;
    }
    e.accepted = e.support >= c_const && e.empirical_frequency >= 2 && !capped_every_visit;
    out.push_back(std::move(e));
  }
  return out;
}

// --- Page composition ----------------------------------------------------------

// Classified-ad count per page view -> page-view count.
inline std::map<int, long long> placements_distribution(
    const std::vector<ImpressionRecord>& log) {
  std::map<PageViewKey, int> ads_per_view;
  for (const auto& r : log) {
    auto [it, inserted] = ads_per_view.try_emplace(page_view_key(r), 0);
    (void)inserted;
    if (r.classification.is_ad) it->second++;
  }
  std::map<int, long long> hist;
  for (const auto& [view, n] : ads_per_view) hist[n]++;
  return hist;
}

struct AdvertisersPerPage {
  // (ad placements on page, distinct advertisers on page) -> page views
  std::map<std::pair<int, int>, long long> cells;
  long long excluded_unresolved = 0;  // page views with an unresolved ad
};

inline AdvertisersPerPage advertisers_per_page(const std::vector<ImpressionRecord>& log) {
  struct View {
    int ads = 0;
    bool unresolved = false;
    std::set<std::string> advertisers;
  };
  std::map<PageViewKey, View> views;
  for (const auto& r : log) {
    View& v = views[page_view_key(r)];
    if (!r.classification.is_ad) continue;
    v.ads++;
    if (r.advertiser_domain) {
      v.advertisers.insert(*r.advertiser_domain);
    } else {
      v.unresolved = true;
    }
  }
  AdvertisersPerPage out;
  for (const auto& [key, v] : views) {
    if (v.ads == 0) continue;
    if (v.unresolved) {
      out.excluded_unresolved++;
      continue;
    }
    out.cells[{v.ads, static_cast<int>(v.advertisers.size())}]++;
  }
  return out;
}

// --- Advertiser rank curve -------------------------------------------------------

struct RankCurve {
  std::vector<MeanCi> non_empty;  // index = visit ordinal - 1
  std::vector<MeanCi> empty_profile;
};

// Mean advertiser rank per visit ordinal with a normal-approximation 95%
// interval, split by empty vs non-empty persona. Ads without a known rank are
// skipped.
inline RankCurve advertiser_rank_curve(const std::vector<ImpressionRecord>& log,
                                       const std::map<std::string, int>& ranks,
                                       const std::string& strategy = "long", int alpha = 100) {
  std::vector<std::vector<double>> non_empty(static_cast<size_t>(alpha));
  std::vector<std::vector<double>> empty(static_cast<size_t>(alpha));
  for (const auto& r : log) {
    if (r.strategy != strategy || !r.classification.is_ad || !r.advertiser_domain) continue;
    auto it = ranks.find(*r.advertiser_domain);
    if (it == ranks.end()) continue;
    int ord = (r.repetition - 1) * alpha + r.visit;
    if (ord < 1 || ord > alpha) continue;
    auto& bucket = (r.persona == kEmptyPersonaId ? empty : non_empty)[static_cast<size_t>(ord - 1)];
    bucket.push_back(static_cast<double>(it->second));
  }
  RankCurve curve;
  for (int v = 0; v < alpha; ++v) {
    curve.non_empty.push_back(non_empty[static_cast<size_t>(v)].empty()
                                  ? MeanCi{}
                                  : mean_ci(non_empty[static_cast<size_t>(v)]));
    curve.empty_profile.push_back(empty[static_cast<size_t>(v)].empty()
                                      ? MeanCi{}
                                      : mean_ci(empty[static_cast<size_t>(v)]));
  }
  return curve;
}

// --- Contribution curves ---------------------------------------------------------

struct ContributionCurve {
  std::vector<std::string> order;        // entities ranked by contribution
  std::vector<long long> cumulative;     // distinct ads covered by top-k
};

namespace detail {

inline ContributionCurve contribution_curve(
    const std::map<std::string, std::set<std::string>>& ads_by_entity) {
  std::vector<std::pair<std::string, const std::set<std::string>*>> ranked;
  for (const auto& [name, ads] : ads_by_entity) ranked.emplace_back(name, &ads);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second->size() != b.second->size()) return a.second->size() > b.second->size();
    return a.first < b.first;
  });
  ContributionCurve curve;
  std::set<std::string> covered;
  for (const auto& [name, ads] : ranked) {
    covered.insert(ads->begin(), ads->end());
    curve.order.push_back(name);
    curve.cumulative.push_back(static_cast<long long>(covered.size()));
  }
  return curve;
}

}  // namespace detail

struct ContributionCurves {
  ContributionCurve websites;
  ContributionCurve personas;
};

inline ContributionCurves contribution_curves(const std::vector<ImpressionRecord>& log) {
  std::map<std::string, std::set<std::string>> by_site, by_persona;
  for (const auto& r : log) {
    if (!r.classification.is_ad || !r.ad_id) continue;
    by_site[r.website].insert(*r.ad_id);
    by_persona[r.persona].insert(*r.ad_id);
  }
  return {detail::contribution_curve(by_site), detail::contribution_curve(by_persona)};
}

// --- Heat map -------------------------------------------------------------------

struct HeatMap {
  std::vector<std::string> rows;  // persona top-level interests, plus EMPTY
  std::vector<std::string> cols;  // canonical ad categories
  std::vector<std::vector<double>> cells;  // row-normalized
  std::vector<double> row_mass;            // pre-normalization mass
  std::vector<std::string> zero_rows;      // flagged all-zero rows
};

// Each distinct (ad, persona-that-saw-it) sighting contributes
// 1 / (number of distinct personas that saw the ad) to the cell
// (persona row, ad category); rows are then normalized to sum 1.
inline HeatMap heat_map(const std::vector<ImpressionRecord>& log,
                        const CategoryMapping& mapping,
                        const std::map<std::string, Persona>& personas) {
  std::map<std::string, std::set<std::string>> viewers;  // ad -> persona ids
  std::map<std::string, std::string> ad_domain;
  for (const auto& r : log) {
    if (!r.classification.is_ad || !r.ad_id) continue;
    viewers[*r.ad_id].insert(r.persona);
    if (r.advertiser_domain) ad_domain[*r.ad_id] = *r.advertiser_domain;
  }

  auto row_of = [&](const std::string& persona_id) -> std::string {
    if (persona_id == kEmptyPersonaId) return kEmptyPersonaId;
    auto it = personas.find(persona_id);
    if (it == personas.end() || it->second.target_category.empty()) return kEmptyPersonaId;
    return CategoryTree::top_level(it->second.target_category);
  };

  std::set<std::string> row_names, col_names;
  for (const auto& [ad, who] : viewers)
    for (const auto& p : who) row_names.insert(row_of(p));
  std::map<std::string, std::string> ad_category;
  for (const auto& [ad, who] : viewers) {
    auto dit = ad_domain.find(ad);
    if (dit == ad_domain.end()) continue;  // unresolved: no category
    std::string cat = categorize_advertiser(mapping, dit->second);
    ad_category[ad] = cat;
    col_names.insert(cat);
  }

  HeatMap hm;
  hm.rows.assign(row_names.begin(), row_names.end());
  hm.cols.assign(col_names.begin(), col_names.end());
  std::map<std::string, size_t> row_idx, col_idx;
  for (size_t i = 0; i < hm.rows.size(); ++i) row_idx[hm.rows[i]] = i;
  for (size_t i = 0; i < hm.cols.size(); ++i) col_idx[hm.cols[i]] = i;
  hm.cells.assign(hm.rows.size(), std::vector<double>(hm.cols.size(), 0.0));
  hm.row_mass.assign(hm.rows.size(), 0.0);

  for (const auto& [ad, who] : viewers) {
    auto cit = ad_category.find(ad);
    if (cit == ad_category.end()) continue;
    double weight = 1.0 / static_cast<double>(who.size());
    for (const auto& p : who) {
      size_t ri = row_idx.at(row_of(p));
      hm.cells[ri][col_idx.at(cit->second)] += weight;
      hm.row_mass[ri] += weight;
    }
  }

  for (size_t ri = 0; ri < hm.rows.size(); ++ri) {
    if (hm.row_mass[ri] <= 0) {
      hm.zero_rows.push_back(hm.rows[ri]);
      continue;
    }
    for (double& cell : hm.cells[ri]) cell /= hm.row_mass[ri];
  }
  return hm;
}

// Impressions and distinct ads per canonical advertiser category.
inline std::map<std::string, std::pair<long long, long long>> category_distribution(
    const std::vector<ImpressionRecord>& log, const CategoryMapping& mapping) {
  std::map<std::string, long long> impressions;
  std::map<std::string, std::set<std::string>> ads;
  for (const auto& r : log) {
    if (!r.classification.is_ad || !r.ad_id) continue;
    std::string cat = r.advertiser_domain ? categorize_advertiser(mapping, *r.advertiser_domain)
                                          : std::string(kUnknownCategory);
    impressions[cat]++;
    ads[cat].insert(*r.ad_id);
  }
  std::map<std::string, std::pair<long long, long long>> out;
  for (const auto& [cat, n] : impressions)
    out[cat] = {n, static_cast<long long>(ads[cat].size())};
  return out;
}

}  // namespace adlens
