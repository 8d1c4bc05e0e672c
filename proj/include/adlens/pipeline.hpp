#pragma once

// Pipeline stages: gen-ecosystem, build-personas, survey, plan, crawl,
// analyze. Every stage writes a manifest recording the content hashes of its
// inputs and outputs plus the config hash; a stage re-runs only when
// something it depends on changed, so a finished pipeline is idempotent and
// partially deleted outputs regenerate identically.

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adlens/analytics.hpp"
#include "adlens/catalog_gen.hpp"
#include "adlens/controller.hpp"
#include "adlens/run_config.hpp"

namespace adlens {

struct StageFailed : std::runtime_error {
  StageFailed(const std::string& stage, const std::string& cause)
      : std::runtime_error("stage " + stage + " failed: " + cause) {}
};

namespace detail {

inline std::string hash_hex(const std::filesystem::path& p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_file(p))));
  return buf;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

class StageRunner {
 public:
  explicit StageRunner(const RunConfig& cfg, std::ostream& log = std::cout)
      : cfg_(&cfg), log_(&log) {
    config_hash_ = fnv1a64(cfg.to_key_values());
  }

  // Runs `body` unless the stage manifest shows identical inputs, outputs,
  // and config. Returns true when the stage executed.
  bool run(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
           const std::vector<std::filesystem::path>& outputs,
           const std::function<void()>& body) {
    if (fresh(stage, inputs, outputs)) {
      (*log_) << "[" << stage << "] up to date\n";
      return false;
    }
    (*log_) << "[" << stage << "] running\n";
    try {
      body();
    } catch (const std::exception& e) {
      throw StageFailed(stage, e.what());
    }
    write_manifest(stage, inputs, outputs);
    return true;
  }

 private:
  std::filesystem::path manifest_path(const std::string& stage) const {
    return cfg_->manifests_dir() / (stage + ".manifest");
  }

  bool fresh(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
             const std::vector<std::filesystem::path>& outputs) const {
    auto mp = manifest_path(stage);
    if (!std::filesystem::exists(mp)) return false;
    std::map<std::string, std::string> recorded;
    for (const auto& line : read_lines(mp)) {
      size_t eq = line.find('=');
      if (eq != std::string::npos) recorded[line.substr(0, eq)] = line.substr(eq + 1);
    }
    char cfg_hex[32];
    std::snprintf(cfg_hex, sizeof cfg_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash_));
    if (recorded["config"] != cfg_hex) return false;
    auto check = [&](const std::string& prefix, const std::filesystem::path& p) {
      if (!std::filesystem::exists(p)) return false;
      auto it = recorded.find(prefix + ":" + p.string());
      return it != recorded.end() && it->second == detail::hash_hex(p);
    };
    for (const auto& p : inputs)
      if (!check("in", p)) return false;
    for (const auto& p : outputs)
      if (!check("out", p)) return false;
    return true;
  }

  void write_manifest(const std::string& stage,
                      const std::vector<std::filesystem::path>& inputs,
                      const std::vector<std::filesystem::path>& outputs) const {
    std::string text;
    text += "stage=" + stage + "\n";
    text += std::string("version=") + kVersion + "\n";
    text += "seed=" + std::to_string(cfg_->seed) + "\n";
    char cfg_hex[32];
    std::snprintf(cfg_hex, sizeof cfg_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash_));
    text += std::string("config=") + cfg_hex + "\n";
    for (const auto& p : inputs) text += "in:" + p.string() + "=" + detail::hash_hex(p) + "\n";
    for (const auto& p : outputs)
      text += "out:" + p.string() + "=" + detail::hash_hex(p) + "\n";
    write_file(manifest_path(stage), text);
  }

  const RunConfig* cfg_;
  std::ostream* log_;
  uint64_t config_hash_;
};

// --- Shared loading -----------------------------------------------------------

struct LoadedEnv {
  CategoryTree tree;
  Catalog catalog;
  FilterList filters;
  DimensionList dims;
  SuffixTable suffixes;
};

inline LoadedEnv load_env(const RunConfig& cfg) {
  LoadedEnv env;
  env.tree = CategoryTree::load_file(cfg.taxonomy_path());
  env.catalog = Catalog::load_file(cfg.catalog_path());
  env.filters = FilterList::load_file(cfg.filters_path());
  env.dims = DimensionList::load_file(cfg.dimensions_path());
  env.suffixes = SuffixTable::load_file(cfg.suffixes_path());
  return env;
}

inline std::vector<std::string> persona_pool_targets(const RunConfig& cfg,
                                                     const CategoryTree& tree) {
  std::vector<std::string> targets;
  for (int level : cfg.persona_level_list()) {
    for (const auto& id : tree.ids_at_level(level)) targets.push_back(id);
  }
  if (cfg.persona_count > 0 && targets.size() > static_cast<size_t>(cfg.persona_count))
    targets.resize(static_cast<size_t>(cfg.persona_count));
  return targets;
}

// --- Stages ---------------------------------------------------------------------

inline void stage_gen_ecosystem(const RunConfig& cfg) {
  CategoryTree tree = CategoryTree::load_file(cfg.taxonomy_path());
  GenConfig gen;
  gen.seed = cfg.seed;
  gen.tree = &tree;
  gen.sites = cfg.sites;
  gen.advertisers = cfg.advertisers;
  gen.campaigns = cfg.campaigns;
  gen.targeted_fraction = cfg.targeted_fraction;
  gen.demo_fraction = cfg.demo_fraction;
  gen.capped_fraction = cfg.capped_fraction;
  gen.cap_plants = cfg.cap_plant_list();
  gen.premium_sites = cfg.premium_sites;
  gen.withheld_servers = cfg.withheld_servers;
  gen.untargeted_category_bias = cfg.untargeted_bias;
  gen.direct_fraction = cfg.direct_fraction;
  gen.tracker_fraction = cfg.tracker_fraction;
  gen.zipf_exponent = cfg.zipf_exponent;
  gen.persona_targets = persona_pool_targets(cfg, tree);
  if (cfg.sites < 1 || cfg.campaigns < 1 || cfg.advertisers < 1)
    throw std::runtime_error("invalid ecosystem shape");

  GeneratedEcosystem eco = generate_ecosystem(gen);
  eco.catalog.save_file(cfg.catalog_path());
  write_file(cfg.filters_path(), join(eco.filter_lines, "\n") + "\n");
  write_file(cfg.category_source1_path(), eco.mapping_source1_text);
  write_file(cfg.category_source2_path(), eco.mapping_source2_text);
  write_file(cfg.category_resolution_path(), eco.resolution_text);
  std::string manifest;
  for (const auto& [k, v] : eco.manifest) manifest += k + "=" + v + "\n";
  write_file(cfg.eco_dir() / "groundtruth.txt", manifest);
}

inline void stage_build_personas(const RunConfig& cfg) {
  CategoryTree tree = CategoryTree::load_file(cfg.taxonomy_path());
  Catalog catalog = Catalog::load_file(cfg.catalog_path());
  DemographicsMap demo = DemographicsMap::load_file(cfg.demographics_path());
  std::vector<Persona> pool;
  for (const auto& target : persona_pool_targets(cfg, tree))
    pool.push_back(build_persona(tree, target, catalog,
                                 static_cast<size_t>(cfg.persona_sites), demo));
  pool.push_back(empty_persona());
  save_personas(pool, cfg.personas_path());
}

inline CrawlContext make_context(const RunConfig& cfg, LoadedEnv& env, PageSource& source) {
  CrawlContext ctx;
  ctx.source = &source;
  ctx.catalog = &env.catalog;
  ctx.filters = &env.filters;
  ctx.dims = &env.dims;
  ctx.suffixes = &env.suffixes;
  ctx.timeout_s = cfg.timeout_s;
  ctx.retries = cfg.retries;
  return ctx;
}

inline void stage_survey(const RunConfig& cfg, std::ostream& log) {
  LoadedEnv env = load_env(cfg);
  std::vector<Persona> personas;
  for (auto& p : load_personas(cfg.personas_path()))
    if (!p.is_empty_profile()) personas.push_back(std::move(p));
  std::vector<std::string> websites;
  for (const auto& w : env.catalog.websites) websites.push_back(w.domain);

  EcosystemState state(env.catalog, cfg.seed);
  state.set_keep_ground_truth(false);
  SimulatorSource source(state);
  CrawlContext ctx = make_context(cfg, env, source);
  ObservationSet obs = survey_pass(websites, personas, cfg.survey_visits, ctx, cfg.workers);
  obs.save_file(cfg.survey_obs_path());
  log << "survey pairs=" << obs.pair_count() << " distinct_ads=" << obs.distinct_ad_count()
      << "\n";
}

inline void stage_plan(const RunConfig& cfg, std::ostream& log) {
  ObservationSet obs = ObservationSet::load_file(cfg.survey_obs_path());
  Catalog catalog = Catalog::load_file(cfg.catalog_path());
  auto cover = greedy_max_cover(obs, static_cast<size_t>(cfg.cover_budget));
  std::vector<std::string> websites;
  for (const auto& w : catalog.websites) websites.push_back(w.domain);
  FocusSet focus = build_focus_set(cover, obs, static_cast<size_t>(cfg.top_k),
                                   static_cast<size_t>(cfg.min_occurrences), websites);
  focus.save_file(cfg.focus_set_path());

  auto strategies = cfg.strategy_list();
  long long budget = visit_budget(focus.pairs.size(), strategies);
  std::string report;
  report += "pairs=" + std::to_string(focus.pairs.size()) + "\n";
  report += "cover_pairs=" + std::to_string(focus.count(Provenance::Cover)) + "\n";
  report += "coverage_fix_pairs=" + std::to_string(focus.count(Provenance::CoverageFix)) + "\n";
  report +=
      "empty_baseline_pairs=" + std::to_string(focus.count(Provenance::EmptyBaseline)) + "\n";
  for (const auto& s : strategies)
    report += "strategy_" + s.name + "=" + std::to_string(s.alpha) + "x" +
              std::to_string(s.beta) + "\n";
  report += "visit_budget=" + std::to_string(budget) + "\n";
  write_file(cfg.plan_report_path(), report);
  log << report;
}

inline RunSummary stage_crawl(const RunConfig& cfg, std::ostream& log) {
  LoadedEnv env = load_env(cfg);
  FocusSet focus = FocusSet::load_file(cfg.focus_set_path());
  std::map<std::string, Persona> pool;
  for (auto& p : load_personas(cfg.personas_path())) pool.emplace(p.id, std::move(p));

  CrawlPlan plan;
  plan.worker_count = cfg.workers;
  plan.seed = cfg.seed;
  for (const auto& entry : focus.pairs)
    for (const auto& strat : cfg.strategy_list()) plan.jobs.push_back({entry.pair, strat});

  EcosystemState state(env.catalog, cfg.seed);
  state.set_keep_ground_truth(false);
  SimulatorSource source(state);
  SimRedirectFetcher resolver(env.catalog, cfg.seed, cfg.resolver_fault_rate);
  ResolverCache cache;
  MissLog misses;
  NdjsonLogWriter sink(cfg.impressions_path());

  CrawlContext ctx = make_context(cfg, env, source);
  ctx.resolver = &resolver;
  ctx.resolver_cache = &cache;
  ctx.sink = &sink;
  ctx.miss_log = &misses;

  RunSummary summary = execute_plan(plan, std::move(pool), ctx);
  sink.flush();
  write_file(cfg.miss_log_path(), misses.serialize());
  cache.save_file(cfg.resolver_cache_path());
  write_file(cfg.crawl_summary_path(), summary.to_key_values());
  log << summary.to_key_values();
  return summary;
}

// --- Reports --------------------------------------------------------------------

inline void write_reports(const RunConfig& cfg, std::ostream& log) {
  using detail::format_double;
  auto records = load_impression_log(cfg.impressions_path());
  Catalog catalog = Catalog::load_file(cfg.catalog_path());
  std::map<std::string, Persona> personas;
  for (auto& p : load_personas(cfg.personas_path())) personas.emplace(p.id, std::move(p));

  CategoryMapping mapping;
  mapping.add_source(
      CategoryMapping::load_source_file("source1", cfg.category_source1_path()));
  mapping.add_source(
      CategoryMapping::load_source_file("source2", cfg.category_source2_path()));
  mapping.load_resolution_file(cfg.category_resolution_path());

  auto dir = cfg.reports_dir();
  std::filesystem::create_directories(dir);

  // Arrival of new ads per strategy, with the tail fit.
  std::string fits = "strategy,window_lo,window_hi,slope,intercept\n";
  for (const auto& strat : cfg.strategy_list()) {
    try {
      ArrivalCurve curve = arrival_curve(records, strat.name, strat.alpha);
      std::string csv = "visit,mean_new_ads,total_new_ads\n";
      for (size_t v = 0; v < curve.mean_new.size(); ++v)
        csv += std::to_string(v + 1) + "," + format_double(curve.mean_new[v]) + "," +
               std::to_string(curve.total_new[v]) + "\n";
      write_file(dir / ("arrival_curve_" + strat.name + ".csv"), csv);
      fits += strat.name + "," + std::to_string(curve.fit_lo) + "," +
              std::to_string(curve.fit_hi) + "," + format_double(curve.tail_fit.slope) + "," +
              format_double(curve.tail_fit.intercept) + "\n";
    } catch (const InsufficientData&) {
      // Strategy absent from the log or too short for a fit; no CSV.
    }
  }
  write_file(dir / "arrival_fit.csv", fits);

  // Targeted fractions per website (the per-attribute uniformity analysis).
  std::map<std::string, std::set<std::string>> site_personas;
  std::map<std::string, std::set<std::string>> site_ads;
  for (const auto& r : records) {
    site_personas[r.website].insert(r.persona);
    if (r.classification.is_ad && r.ad_id) site_ads[r.website].insert(*r.ad_id);
  }
  std::string tf = "website,pairs,distinct_ads,profile,gender,age\n";
  for (const auto& [site, who] : site_personas) {
    if (who.size() < 10) continue;
    std::string row = site + "," + std::to_string(who.size()) + "," +
                      std::to_string(site_ads[site].size());
    try {
      row += "," + format_double(
                       targeted_fraction(records, site, TargetAttribute::Profile, personas));
    } catch (const std::exception&) {
      row += ",-";
    }
    for (auto attr : {TargetAttribute::Gender, TargetAttribute::Age}) {
      try {
        row += "," + format_double(targeted_fraction(records, site, attr, personas));
      } catch (const std::exception&) {
        row += ",-";
      }
    }
    tf += row + "\n";
  }
  write_file(dir / "targeted_fractions.csv", tf);

  // Frequency caps.
  auto caps = estimate_frequency_caps(records);
  std::string caps_csv = "ad_id,empirical_frequency,support,accepted\n";
  long long accepted = 0;
  for (const auto& e : caps) {
    caps_csv += e.ad_id + "," + std::to_string(e.empirical_frequency) + "," +
                std::to_string(e.support) + "," + (e.accepted ? "1" : "0") + "\n";
    if (e.accepted) ++accepted;
  }
  write_file(dir / "frequency_caps.csv", caps_csv);

  // Page composition.
  auto hist = placements_distribution(records);
  long long views = 0;
  for (const auto& [k, n] : hist) views += n;
  std::string ph = "placements,page_views,fraction\n";
  for (const auto& [k, n] : hist)
    ph += std::to_string(k) + "," + std::to_string(n) + "," +
          format_double(static_cast<double>(n) / static_cast<double>(views)) + "\n";
  write_file(dir / "placements_hist.csv", ph);

  auto app = advertisers_per_page(records);
  std::string ap = "placements,distinct_advertisers,page_views\n";
  for (const auto& [cell, n] : app.cells)
    ap += std::to_string(cell.first) + "," + std::to_string(cell.second) + "," +
          std::to_string(n) + "\n";
  write_file(dir / "advertisers_per_page.csv", ap);

  // Advertiser rank curve over the long strategy.
  std::map<std::string, int> ranks;
  for (const auto& a : catalog.advertisers)
    if (a.global_rank) ranks[a.domain] = *a.global_rank;
  bool has_long = false;
  for (const auto& s : cfg.strategy_list()) has_long = has_long || s.name == "long";
  if (has_long) {
    auto curve = advertiser_rank_curve(records, ranks, "long", 100);
    std::string rc = "visit,group,mean_rank,ci_lo,ci_hi,n\n";
    for (int v = 0; v < 100; ++v) {
      const MeanCi& ne = curve.non_empty[static_cast<size_t>(v)];
      const MeanCi& em = curve.empty_profile[static_cast<size_t>(v)];
      if (ne.n > 0)
        rc += std::to_string(v + 1) + ",nonempty," + format_double(ne.mean) + "," +
              format_double(ne.lo) + "," + format_double(ne.hi) + "," + std::to_string(ne.n) +
              "\n";
      if (em.n > 0)
        rc += std::to_string(v + 1) + ",empty," + format_double(em.mean) + "," +
              format_double(em.lo) + "," + format_double(em.hi) + "," + std::to_string(em.n) +
              "\n";
    }
    write_file(dir / "advertiser_rank_curve.csv", rc);
  }

  // Contribution curves.
  auto curves = contribution_curves(records);
  auto curve_csv = [&](const ContributionCurve& c, const std::string& label) {
    std::string s = "k," + label + ",cumulative_distinct_ads\n";
    for (size_t i = 0; i < c.order.size(); ++i)
      s += std::to_string(i + 1) + "," + c.order[i] + "," + std::to_string(c.cumulative[i]) +
           "\n";
    return s;
  };
  write_file(dir / "contribution_websites.csv", curve_csv(curves.websites, "website"));
  write_file(dir / "contribution_personas.csv", curve_csv(curves.personas, "persona"));

  // Heat map.
  HeatMap hm = heat_map(records, mapping, personas);
  std::string hm_csv = "row,mass";
  for (const auto& c : hm.cols) hm_csv += "," + c;
  hm_csv += "\n";
  for (size_t r = 0; r < hm.rows.size(); ++r) {
    hm_csv += hm.rows[r] + "," + format_double(hm.row_mass[r]);
    for (double cell : hm.cells[r]) hm_csv += "," + format_double(cell);
    hm_csv += "\n";
  }
  write_file(dir / "heatmap.csv", hm_csv);

  // Impressions per advertiser category.
  auto dist = category_distribution(records, mapping);
  std::string cd = "category,impressions,distinct_ads\n";
  for (const auto& [cat, counts] : dist)
    cd += cat + "," + std::to_string(counts.first) + "," + std::to_string(counts.second) +
          "\n";
  write_file(dir / "category_distribution.csv", cd);

  // Summary + provenance.
  std::set<std::string> distinct_ads, advertisers_seen;
  long long impressions = 0;
  for (const auto& r : records) {
    if (!r.classification.is_ad) continue;
    ++impressions;
    if (r.ad_id) distinct_ads.insert(*r.ad_id);
    if (r.advertiser_domain) advertisers_seen.insert(*r.advertiser_domain);
  }
  std::string summary;
  summary += "records=" + std::to_string(records.size()) + "\n";
  summary += "ad_impressions=" + std::to_string(impressions) + "\n";
  summary += "distinct_ads=" + std::to_string(distinct_ads.size()) + "\n";
  summary += "advertisers=" + std::to_string(advertisers_seen.size()) + "\n";
  summary += "accepted_frequency_caps=" + std::to_string(accepted) + "\n";
  summary += "pageviews_excluded_unresolved=" + std::to_string(app.excluded_unresolved) + "\n";
  summary += "heatmap_zero_rows=" + std::to_string(hm.zero_rows.size()) + "\n";
  write_file(dir / "analyze_summary.txt", summary);
  log << summary;

  // Report-level manifest embedding input provenance.
  std::string manifest;
  manifest += std::string("version=") + kVersion + "\n";
  manifest += "seed=" + std::to_string(cfg.seed) + "\n";
  for (const auto& p :
       {cfg.impressions_path(), cfg.catalog_path(), cfg.personas_path()})
    manifest += "input:" + p.string() + "=" + detail::hash_hex(p) + "\n";
  write_file(dir / "manifest.txt", manifest);
}

// --- Stage wiring ---------------------------------------------------------------

inline std::vector<std::filesystem::path> gen_outputs(const RunConfig& cfg) {
  return {cfg.catalog_path(),          cfg.filters_path(),
          cfg.category_source1_path(), cfg.category_source2_path(),
          cfg.category_resolution_path(), cfg.eco_dir() / "groundtruth.txt"};
}

inline std::vector<std::filesystem::path> report_outputs(const RunConfig& cfg) {
  auto dir = cfg.reports_dir();
  std::vector<std::filesystem::path> outs = {
      dir / "arrival_fit.csv",          dir / "targeted_fractions.csv",
      dir / "frequency_caps.csv",       dir / "placements_hist.csv",
      dir / "advertisers_per_page.csv", dir / "contribution_websites.csv",
      dir / "contribution_personas.csv", dir / "heatmap.csv",
      dir / "category_distribution.csv", dir / "analyze_summary.txt",
      dir / "manifest.txt"};
  return outs;
}

// Full pipeline with resume. Ecosystem generation participates only when the
// catalog artifact is absent or was produced by a previous gen stage here.
inline void run_pipeline(const RunConfig& cfg, std::ostream& log = std::cout) {
  StageRunner runner(cfg, log);
  bool generated_here = std::filesystem::exists(cfg.manifests_dir() / "gen.manifest");
  if (generated_here || !std::filesystem::exists(cfg.catalog_path())) {
    runner.run("gen", {cfg.taxonomy_path()}, gen_outputs(cfg),
               [&] { stage_gen_ecosystem(cfg); });
  }
  runner.run("personas",
             {cfg.taxonomy_path(), cfg.catalog_path(), cfg.demographics_path()},
             {cfg.personas_path()}, [&] { stage_build_personas(cfg); });
  runner.run("survey",
             {cfg.catalog_path(), cfg.personas_path(), cfg.filters_path(),
              cfg.dimensions_path(), cfg.suffixes_path()},
             {cfg.survey_obs_path()}, [&] { stage_survey(cfg, log); });
  runner.run("plan", {cfg.survey_obs_path(), cfg.catalog_path()},
             {cfg.focus_set_path(), cfg.plan_report_path()}, [&] { stage_plan(cfg, log); });
  runner.run("crawl",
             {cfg.catalog_path(), cfg.personas_path(), cfg.focus_set_path(),
              cfg.filters_path(), cfg.dimensions_path(), cfg.suffixes_path()},
             {cfg.impressions_path(), cfg.miss_log_path(), cfg.resolver_cache_path(),
              cfg.crawl_summary_path()},
             [&] { stage_crawl(cfg, log); });
  runner.run("analyze",
             {cfg.impressions_path(), cfg.catalog_path(), cfg.personas_path(),
              cfg.category_source1_path(), cfg.category_source2_path(),
              cfg.category_resolution_path()},
             report_outputs(cfg), [&] { write_reports(cfg, log); });
}

}  // namespace adlens
