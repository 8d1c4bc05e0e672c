// adlens: persona-based ad crawling and analysis against a simulated ad
// ecosystem. Subcommands cover the whole flow: gen-ecosystem,
// build-personas, survey, plan, crawl, analyze, pipeline, plus an `oracle`
// self-check. Every knob can come from a key=value config file (--config)
// or be overridden by the matching flag.

#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "adlens/pipeline.hpp"
#include "adlens/rng.hpp"

#ifndef ADLENS_DATA_DIR
#define ADLENS_DATA_DIR "data"
#endif

namespace {

using namespace adlens;

void add_common_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->set_config("--config", "", "key=value config file; flags override it");
  cmd->add_option("--seed", cfg.seed, "master seed; all randomness derives from it");
  cmd->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--data-dir", cfg.data_dir, "packaged data directory")
      ->capture_default_str();
  cmd->add_option("--catalog", cfg.catalog, "catalog file (default <out>/ecosystem/catalog.txt)");
  cmd->add_option("--filters", cfg.filters, "filter list file");
  cmd->add_option("--taxonomy", cfg.taxonomy, "interest taxonomy file");
  cmd->add_option("--dimensions", cfg.dimensions, "standard creative sizes file");
  cmd->add_option("--suffixes", cfg.suffixes, "two-level public suffix table");
  cmd->add_option("--demographics", cfg.demographics, "persona demographics map");
  cmd->add_option("--category-source1", cfg.category_source1, "primary category source");
  cmd->add_option("--category-source2", cfg.category_source2, "secondary category source");
  cmd->add_option("--category-resolution", cfg.category_resolution,
                  "raw-to-canonical category map");

  cmd->add_option("--sites", cfg.sites, "generated publisher count")->capture_default_str();
  cmd->add_option("--advertisers", cfg.advertisers, "generated advertiser count")
      ->capture_default_str();
  cmd->add_option("--campaigns", cfg.campaigns, "generated campaign count")
      ->capture_default_str();
  cmd->add_option("--targeted-fraction", cfg.targeted_fraction,
                  "share of campaigns with interest targeting")
      ->capture_default_str();
  cmd->add_option("--demo-fraction", cfg.demo_fraction,
                  "share of targeted campaigns that also constrain gender/age")
      ->capture_default_str();
  cmd->add_option("--capped-fraction", cfg.capped_fraction,
                  "share of campaigns given random small frequency caps")
      ->capture_default_str();
  cmd->add_option("--cap-plants", cfg.cap_plants,
                  "comma list of planted dominant frequency caps")
      ->capture_default_str();
  cmd->add_option("--premium-sites", cfg.premium_sites,
                  "leading sites given premium contracts")
      ->capture_default_str();
  cmd->add_option("--withheld-servers", cfg.withheld_servers,
                  "ad servers deliberately left out of the filter list")
      ->capture_default_str();
  cmd->add_option("--untargeted-bias", cfg.untargeted_bias,
                  "bias of untargeted advertisers toward the Restaurants category")
      ->capture_default_str();
  cmd->add_option("--direct-fraction", cfg.direct_fraction, "share of direct click URLs")
      ->capture_default_str();
  cmd->add_option("--tracker-fraction", cfg.tracker_fraction,
                  "share of decodable tracker click URLs")
      ->capture_default_str();
  cmd->add_option("--zipf", cfg.zipf_exponent, "campaign weight skew exponent")
      ->capture_default_str();

  cmd->add_option("--persona-levels", cfg.persona_levels,
                  "taxonomy levels the persona pool draws from")
      ->capture_default_str();
  cmd->add_option("--personas", cfg.persona_count, "persona pool size cap (0 = all)")
      ->capture_default_str();
  cmd->add_option("--persona-sites", cfg.persona_sites,
                  "sites visited when building each persona")
      ->capture_default_str();

  cmd->add_option("--survey-visits", cfg.survey_visits, "visits per pair in the survey pass")
      ->capture_default_str();
  cmd->add_option("--cover-budget", cfg.cover_budget, "greedy cover budget (pairs)")
      ->capture_default_str();
  cmd->add_option("--top-k", cfg.top_k, "pairs kept from the cover order")
      ->capture_default_str();
  cmd->add_option("--min-occurrences", cfg.min_occurrences,
                  "minimum pair occurrences per site and persona")
      ->capture_default_str();

  cmd->add_option("--strategy,--strategies", cfg.strategies,
                  "crawl strategies: long, short, or name:alpha:beta")
      ->capture_default_str();
  cmd->add_option("--workers", cfg.workers, "concurrent crawl workers")
      ->capture_default_str();
  cmd->add_option("--timeout-s", cfg.timeout_s, "page load timeout, seconds")
      ->capture_default_str();
  cmd->add_option("--retries", cfg.retries, "extra attempts after a timed-out load")
      ->capture_default_str();
  cmd->add_option("--resolver-fault-rate", cfg.resolver_fault_rate,
                  "fraction of click URLs whose resolution is blocked")
      ->capture_default_str();
}

int run_oracle(const RunConfig& cfg, int instances) {
  bool all_ok = true;
  const double bound = 1.0 - 1.0 / std::exp(1.0);

  Rng rng(cfg.seed);
  double worst = 1.0;
  int violations = 0;
  for (int i = 0; i < instances; ++i) {
    ObservationSet obs;
    size_t n_pairs = 1 + rng.below(12);
    size_t n_ads = 1 + rng.below(20);
    for (size_t pidx = 0; pidx < n_pairs; ++pidx) {
      std::string w = "w" + std::to_string(rng.below(6));
      std::string p = "p" + std::to_string(pidx);
      obs.add_pair(w, p);
      size_t set_size = rng.below(n_ads + 1);
      for (size_t k = 0; k < set_size; ++k)
        obs.add(w, p, "ad" + std::to_string(rng.below(n_ads)));
    }
    size_t budget = 1 + rng.below(5);
    size_t greedy = cover_value(greedy_max_cover(obs, budget));
    size_t best = brute_force_cover(obs, budget).coverage;
    if (best > 0) {
      double ratio = static_cast<double>(greedy) / static_cast<double>(best);
      worst = std::min(worst, ratio);
      if (ratio < bound - 1e-12) ++violations;
    }
  }
  std::cout << "max-cover greedy vs brute force: instances=" << instances
            << " worst_ratio=" << worst << " bound=" << bound
            << (violations == 0 ? " PASS" : " FAIL") << "\n";
  all_ok = all_ok && violations == 0;

  // Chi-squared tail vs closed forms for 2/4/6 degrees of freedom.
  double max_err = 0;
  for (double x : {0.5, 2.0, 9.5, 20.0, 40.0}) {
    max_err = std::max(max_err, std::fabs(chi2_pvalue(x, 2) - std::exp(-x / 2)));
    max_err = std::max(max_err, std::fabs(chi2_pvalue(x, 4) - std::exp(-x / 2) * (1 + x / 2)));
    max_err = std::max(
        max_err, std::fabs(chi2_pvalue(x, 6) - std::exp(-x / 2) * (1 + x / 2 + x * x / 8)));
  }
  bool gamma_ok = max_err < 1e-10;
  std::cout << "chi-squared tail vs closed forms: max_abs_err=" << max_err
            << (gamma_ok ? " PASS" : " FAIL") << "\n";
  all_ok = all_ok && gamma_ok;
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"persona-based ad crawling and targeting analysis toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.data_dir = ADLENS_DATA_DIR;
  int oracle_instances = 1000;

  auto* gen = app.add_subcommand("gen-ecosystem",
                                 "generate a catalog, filter list, and category mappings");
  auto* personas = app.add_subcommand("build-personas", "build the persona pool");
  auto* survey = app.add_subcommand("survey", "visit every pair briefly and record ad sets");
  auto* plan = app.add_subcommand("plan", "select the focus set by budgeted max cover");
  auto* crawl = app.add_subcommand("crawl", "execute the crawl plan and log impressions");
  auto* analyze = app.add_subcommand("analyze", "write every report CSV from the log");
  auto* pipeline = app.add_subcommand("pipeline", "run all stages in order, resumable");
  auto* oracle = app.add_subcommand("oracle", "run independent-oracle self checks");
  for (CLI::App* cmd : {gen, personas, survey, plan, crawl, analyze, pipeline, oracle})
    add_common_options(cmd, cfg);
  oracle->add_option("--instances", oracle_instances, "random instances to check")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    StageRunner runner(cfg, std::cout);
    if (gen->parsed()) {
      runner.run("gen", {cfg.taxonomy_path()}, gen_outputs(cfg),
                 [&] { stage_gen_ecosystem(cfg); });
    } else if (personas->parsed()) {
      runner.run("personas",
                 {cfg.taxonomy_path(), cfg.catalog_path(), cfg.demographics_path()},
                 {cfg.personas_path()}, [&] { stage_build_personas(cfg); });
    } else if (survey->parsed()) {
      runner.run("survey",
                 {cfg.catalog_path(), cfg.personas_path(), cfg.filters_path(),
                  cfg.dimensions_path(), cfg.suffixes_path()},
                 {cfg.survey_obs_path()}, [&] { stage_survey(cfg, std::cout); });
    } else if (plan->parsed()) {
      runner.run("plan", {cfg.survey_obs_path(), cfg.catalog_path()},
                 {cfg.focus_set_path(), cfg.plan_report_path()},
                 [&] { stage_plan(cfg, std::cout); });
    } else if (crawl->parsed()) {
      runner.run("crawl",
                 {cfg.catalog_path(), cfg.personas_path(), cfg.focus_set_path(),
                  cfg.filters_path(), cfg.dimensions_path(), cfg.suffixes_path()},
                 {cfg.impressions_path(), cfg.miss_log_path(), cfg.resolver_cache_path(),
                  cfg.crawl_summary_path()},
                 [&] { stage_crawl(cfg, std::cout); });
    } else if (analyze->parsed()) {
      runner.run("analyze",
                 {cfg.impressions_path(), cfg.catalog_path(), cfg.personas_path(),
                  cfg.category_source1_path(), cfg.category_source2_path(),
                  cfg.category_resolution_path()},
                 report_outputs(cfg), [&] { write_reports(cfg, std::cout); });
    } else if (pipeline->parsed()) {
      run_pipeline(cfg, std::cout);
    } else if (oracle->parsed()) {
      return run_oracle(cfg, oracle_instances);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
