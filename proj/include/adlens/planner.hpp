#pragma once

// Budgeted max-cover crawl planning. The greedy selector repeatedly takes the
// (website, persona) pair with the most not-yet-covered ads, removes those
// ads from the rest, and re-ranks; ties break lexicographically on
// (website, persona) so plans are reproducible. A brute-force oracle gives
// exact optima on small instances. The focus-set builder applies the
// operational post-processing: top-k truncation, minimum-occurrence coverage
// fixes walked from the remaining order, and per-site empty-profile
// baselines.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "adlens/persona.hpp"
#include "adlens/text.hpp"

namespace adlens {

struct PairKey {
  std::string website;
  std::string persona;
  auto operator<=>(const PairKey&) const = default;
};

struct InstanceTooLarge : std::runtime_error {
  explicit InstanceTooLarge(size_t n)
      : std::runtime_error("brute force limited to 20 pairs, got " + std::to_string(n)) {}
};
struct UnsatisfiableCoverage : std::runtime_error {
  explicit UnsatisfiableCoverage(const std::string& what)
      : std::runtime_error("cannot reach minimum occurrences for: " + what) {}
};

class ObservationSet {
 public:
  void add(const std::string& website, const std::string& persona, const std::string& ad_id) {
    entries_[{website, persona}].insert(ad_id);
  }

  void add_pair(const std::string& website, const std::string& persona) {
    entries_.try_emplace({website, persona});
  }

  const std::map<PairKey, std::set<std::string>>& entries() const { return entries_; }
  size_t pair_count() const { return entries_.size(); }

  size_t distinct_ad_count() const {
    std::set<std::string> all;
    for (const auto& [pair, ads] : entries_) all.insert(ads.begin(), ads.end());
    return all.size();
  }

  // File format: website<TAB>persona<TAB>ad_id, one ad per line; a pair with
  // no ads is kept as website<TAB>persona<TAB>-.
  std::string serialize() const {
    std::string out;
    for (const auto& [pair, ads] : entries_) {
      if (ads.empty()) {
        out += pair.website + "\t" + pair.persona + "\t-\n";
        continue;
      }
      for (const auto& ad : ads) out += pair.website + "\t" + pair.persona + "\t" + ad + "\n";
    }
    return out;
  }

  static ObservationSet parse(const std::vector<std::string>& lines) {
    ObservationSet obs;
    for (const auto& line : lines) {
      if (line.empty() || line[0] == '#') continue;
      auto f = split(line, '\t');
      if (f.size() != 3) throw std::runtime_error("bad observation line: " + line);
      if (f[2] == "-") {
        obs.add_pair(f[0], f[1]);
      } else {
        obs.add(f[0], f[1], f[2]);
      }
    }
    return obs;
  }

  static ObservationSet load_file(const std::filesystem::path& p) { return parse(read_lines(p)); }
  void save_file(const std::filesystem::path& p) const { write_file(p, serialize()); }

 private:
  std::map<PairKey, std::set<std::string>> entries_;
};

struct CoverPick {
  PairKey pair;
  size_t marginal_gain = 0;
};

// Greedy selection, lazily re-evaluated. Emits up to `budget` picks in
// selection order, including zero-gain tail picks, so the full ordering is
// available for focus-set coverage fixes.
inline std::vector<CoverPick> greedy_max_cover(const ObservationSet& obs, size_t budget) {
  std::vector<CoverPick> picks;
  if (budget == 0 || obs.entries().empty()) return picks;

  std::unordered_map<std::string, int> ad_index;
  std::vector<PairKey> pairs;
  std::vector<std::vector<int>> ads_of;
  for (const auto& [pair, ads] : obs.entries()) {
    pairs.push_back(pair);
    std::vector<int> ids;
    ids.reserve(ads.size());
    for (const auto& ad : ads) {
      auto [it, inserted] = ad_index.try_emplace(ad, static_cast<int>(ad_index.size()));
      (void)inserted;
      ids.push_back(it->second);
    }
    ads_of.push_back(std::move(ids));
  }

  std::vector<char> covered(ad_index.size(), 0);
  auto gain_of = [&](size_t i) {
    size_t g = 0;
    for (int ad : ads_of[i])
      if (!covered[ad]) ++g;
    return g;
  };

  // Max-heap on (gain, lexicographic pair). Entries hold possibly-stale
  // gains; a popped entry is re-scored and re-queued unless still current.
  struct Entry {
    size_t gain;
    size_t idx;
  };
  auto worse = [&](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return pairs[a.idx] > pairs[b.idx];
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  for (size_t i = 0; i < pairs.size(); ++i) heap.push({ads_of[i].size(), i});

  std::vector<char> taken(pairs.size(), 0);
  while (picks.size() < budget && !heap.empty()) {
    Entry top = heap.top();
    heap.pop();
    if (taken[top.idx]) continue;
    size_t fresh = gain_of(top.idx);
    if (fresh != top.gain) {
      heap.push({fresh, top.idx});
      continue;
    }
    taken[top.idx] = 1;
    for (int ad : ads_of[top.idx]) covered[ad] = 1;
    picks.push_back({pairs[top.idx], fresh});
  }
  return picks;
}

inline size_t cover_value(const std::vector<CoverPick>& picks) {
  size_t total = 0;
  for (const auto& p : picks) total += p.marginal_gain;
  return total;
}

struct BruteForceResult {
  size_t coverage = 0;
  std::vector<PairKey> subset;
};

// Exhaustive optimum over all subsets of size <= budget. Guarded to 20 pairs.
inline BruteForceResult brute_force_cover(const ObservationSet& obs, size_t budget) {
  const auto& entries = obs.entries();
  if (entries.size() > 20) throw InstanceTooLarge(entries.size());

  std::unordered_map<std::string, int> ad_index;
  std::vector<PairKey> pairs;
  std::vector<std::vector<uint64_t>> masks;
  size_t words = 1;
  for (const auto& [pair, ads] : entries)
    for (const auto& ad : ads) ad_index.try_emplace(ad, static_cast<int>(ad_index.size()));
  words = ad_index.size() / 64 + 1;
  for (const auto& [pair, ads] : entries) {
    pairs.push_back(pair);
    std::vector<uint64_t> mask(words, 0);
    for (const auto& ad : ads) {
      int id = ad_index.at(ad);
      mask[static_cast<size_t>(id) / 64] |= 1ULL << (id % 64);
    }
    masks.push_back(std::move(mask));
  }

  BruteForceResult best;
  std::vector<size_t> chosen;
  std::vector<uint64_t> acc(words, 0);

  auto popcount = [&](const std::vector<uint64_t>& m) {
    size_t c = 0;
    for (uint64_t w : m) c += static_cast<size_t>(__builtin_popcountll(w));
    return c;
  };

  std::function<void(size_t)> recurse = [&](size_t start) {
    size_t value = popcount(acc);
    if (value > best.coverage) {
      best.coverage = value;
      best.subset.clear();
      for (size_t i : chosen) best.subset.push_back(pairs[i]);
    }
    if (chosen.size() == budget) return;
    for (size_t i = start; i < pairs.size(); ++i) {
      std::vector<uint64_t> saved = acc;
      for (size_t w = 0; w < words; ++w) acc[w] |= masks[i][w];
      chosen.push_back(i);
      recurse(i + 1);
      chosen.pop_back();
      acc = saved;
    }
  };
  recurse(0);
  return best;
}

// --- Focus set ---------------------------------------------------------------

enum class Provenance { Cover, CoverageFix, EmptyBaseline };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Cover: return "cover";
    case Provenance::CoverageFix: return "coverage-fix";
    case Provenance::EmptyBaseline: return "empty-baseline";
  }
  return "cover";
}

inline Provenance provenance_from(const std::string& s) {
  if (s == "cover") return Provenance::Cover;
  if (s == "coverage-fix") return Provenance::CoverageFix;
  if (s == "empty-baseline") return Provenance::EmptyBaseline;
  throw std::runtime_error("bad provenance: " + s);
}

struct FocusSet {
  struct Entry {
    PairKey pair;
    Provenance provenance = Provenance::Cover;
  };
  std::vector<Entry> pairs;
  size_t budget = 0;

  size_t count(Provenance p) const {
    size_t n = 0;
    for (const auto& e : pairs)
      if (e.provenance == p) ++n;
    return n;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& e : pairs)
      out += e.pair.website + "\t" + e.pair.persona + "\t" + to_string(e.provenance) + "\n";
    return out;
  }

  static FocusSet parse(const std::vector<std::string>& lines) {
    FocusSet fs;
    for (const auto& line : lines) {
      if (line.empty() || line[0] == '#') continue;
      auto f = split(line, '\t');
      if (f.size() != 3) throw std::runtime_error("bad focus line: " + line);
      fs.pairs.push_back({{f[0], f[1]}, provenance_from(f[2])});
    }
    return fs;
  }

  static FocusSet load_file(const std::filesystem::path& p) { return parse(read_lines(p)); }
  void save_file(const std::filesystem::path& p) const { write_file(p, serialize()); }
};

// Takes the top_k cover picks; walks the remaining order appending pairs
// until every website and persona of the top-k universe occurs in at least
// min_occurrences selected pairs; then appends one (website, EMPTY) baseline
// per distinct website, ordered by `websites` (catalog order) with any
// stragglers sorted last.
inline FocusSet build_focus_set(const std::vector<CoverPick>& cover, const ObservationSet& obs,
                                size_t top_k, size_t min_occurrences,
                                const std::vector<std::string>& websites) {
  (void)obs;
  FocusSet fs;
  fs.budget = top_k;

  std::map<std::string, size_t> site_count;
  std::map<std::string, size_t> persona_count;
  size_t take = std::min(top_k, cover.size());
  for (size_t i = 0; i < take; ++i) {
    fs.pairs.push_back({cover[i].pair, Provenance::Cover});
    site_count[cover[i].pair.website]++;
    persona_count[cover[i].pair.persona]++;
  }

  std::set<std::string> need_sites, need_personas;
  for (const auto& [w, n] : site_count)
    if (n < min_occurrences) need_sites.insert(w);
  for (const auto& [p, n] : persona_count)
    if (n < min_occurrences) need_personas.insert(p);

  for (size_t i = take; i < cover.size() && (!need_sites.empty() || !need_personas.empty());
       ++i) {
    const PairKey& pair = cover[i].pair;
    bool wanted = need_sites.count(pair.website) || need_personas.count(pair.persona);
    if (!wanted) continue;
    fs.pairs.push_back({pair, Provenance::CoverageFix});
    if (++site_count[pair.website] >= min_occurrences) need_sites.erase(pair.website);
    if (++persona_count[pair.persona] >= min_occurrences) need_personas.erase(pair.persona);
  }
  if (!need_sites.empty() || !need_personas.empty()) {
    std::string missing =
        !need_sites.empty() ? *need_sites.begin() : *need_personas.begin();
    throw UnsatisfiableCoverage(missing);
  }

  std::set<std::string> present;
  for (const auto& e : fs.pairs) present.insert(e.pair.website);
  std::set<std::string> emitted;
  for (const auto& w : websites) {
    if (present.count(w) && !emitted.count(w)) {
      fs.pairs.push_back({{w, kEmptyPersonaId}, Provenance::EmptyBaseline});
      emitted.insert(w);
    }
  }
  for (const auto& w : present) {
    if (!emitted.count(w)) {
      fs.pairs.push_back({{w, kEmptyPersonaId}, Provenance::EmptyBaseline});
      emitted.insert(w);
    }
  }
  return fs;
}

}  // namespace adlens
