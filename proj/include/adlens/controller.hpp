#pragma once

// Crawl-plan execution. Each job crawls one (website, persona) pair with one
// strategy: beta repetitions of alpha rapid sequential visits, the persona
// reset to its build-time snapshot before every repetition and contaminated
// between visits. Every extracted element is classified and logged.
//
// Concurrency: jobs sharing a persona run sequentially in plan order (a
// persona is owned by one session at a time); distinct personas run in
// parallel up to worker_count, with at most one in-flight fetch per website.
// Records are committed to the sink in plan order, so logs are byte-identical
// across runs and worker counts.

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "adlens/classify.hpp"
#include "adlens/fetch.hpp"
#include "adlens/landing.hpp"
#include "adlens/planner.hpp"
#include "adlens/stats.hpp"

namespace adlens {

struct StrategySpec {
  int alpha = 1;  // rapid sequential visits per repetition
  int beta = 1;   // repetitions
  std::string name = "custom";

  static StrategySpec short_preset() { return {10, 5, "short"}; }
  static StrategySpec long_preset() { return {100, 1, "long"}; }

  int visits() const { return alpha * beta; }
};

// Total visits implied by crawling `pairs` pairs under every given strategy.
inline long long visit_budget(size_t pairs, const std::vector<StrategySpec>& strategies) {
  long long per_pair = 0;
  for (const auto& s : strategies) per_pair += static_cast<long long>(s.alpha) * s.beta;
  return static_cast<long long>(pairs) * per_pair;
}

struct CrawlJob {
  PairKey pair;
  StrategySpec strategy;
};

struct CrawlPlan {
  std::vector<CrawlJob> jobs;
  int worker_count = 1;
  uint64_t seed = 0;

  void validate() const {
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& j : jobs) {
      if (j.strategy.alpha < 1 || j.strategy.beta < 1)
        throw std::runtime_error("strategy bounds must be >= 1");
      auto key = std::make_tuple(j.pair.website, j.pair.persona, j.strategy.name);
      if (!seen.insert(key).second)
        throw std::runtime_error("duplicate job: " + j.pair.website + "/" + j.pair.persona +
                                 "/" + j.strategy.name);
    }
    if (worker_count < 1) throw std::runtime_error("worker_count must be >= 1");
  }
};

struct ImpressionRecord {
  std::string website;
  std::string persona;
  std::string strategy;
  int repetition = 1;  // in [1, beta]
  int visit = 1;       // in [1, alpha]
  int64_t timestamp = 0;
  std::string page_url;
  VisualElement element;
  Classification classification;
  std::optional<std::string> ad_id;             // creative URL, present iff is_ad
  std::optional<std::string> advertiser_domain; // registrable landing domain when resolved
};

inline constexpr int kLogSchemaVersion = 1;

inline nlohmann::json impression_to_json(const ImpressionRecord& r) {
  nlohmann::json j;
  j["v"] = kLogSchemaVersion;
  j["w"] = r.website;
  j["p"] = r.persona;
  j["strat"] = r.strategy;
  j["rep"] = r.repetition;
  j["visit"] = r.visit;
  j["ts"] = r.timestamp;
  j["url"] = r.page_url;
  if (!r.element.element_id.empty()) j["eid"] = r.element.element_id;
  j["src"] = r.element.source_url;
  if (r.element.iframe_url) j["iframe"] = *r.element.iframe_url;
  if (r.element.landing_url) j["landing"] = *r.element.landing_url;
  if (r.element.div_class) j["divc"] = *r.element.div_class;
  j["wd"] = r.element.width;
  j["ht"] = r.element.height;
  j["ad"] = r.classification.is_ad;
  j["fp"] = r.classification.filter_pass;
  j["dp"] = r.classification.dimension_pass;
  j["sp"] = r.classification.self_ad_pass;
  if (r.classification.matched_rule) j["rule"] = *r.classification.matched_rule;
  if (r.ad_id) j["ad_id"] = *r.ad_id;
  if (r.advertiser_domain) j["adv"] = *r.advertiser_domain;
  return j;
}

inline ImpressionRecord impression_from_json(const nlohmann::json& j) {
  ImpressionRecord r;
  r.website = j.at("w").get<std::string>();
  r.persona = j.at("p").get<std::string>();
  r.strategy = j.at("strat").get<std::string>();
  r.repetition = j.at("rep").get<int>();
  r.visit = j.at("visit").get<int>();
  r.timestamp = j.at("ts").get<int64_t>();
  r.page_url = j.at("url").get<std::string>();
  if (j.contains("eid")) r.element.element_id = j["eid"].get<std::string>();
  r.element.source_url = j.at("src").get<std::string>();
  if (j.contains("iframe")) r.element.iframe_url = j["iframe"].get<std::string>();
  if (j.contains("landing")) r.element.landing_url = j["landing"].get<std::string>();
  if (j.contains("divc")) r.element.div_class = j["divc"].get<std::string>();
  r.element.width = j.at("wd").get<int>();
  r.element.height = j.at("ht").get<int>();
  r.classification.is_ad = j.at("ad").get<bool>();
  r.classification.filter_pass = j.at("fp").get<bool>();
  r.classification.dimension_pass = j.at("dp").get<bool>();
  r.classification.self_ad_pass = j.at("sp").get<bool>();
  if (j.contains("rule")) r.classification.matched_rule = j["rule"].get<std::string>();
  if (j.contains("ad_id")) r.ad_id = j["ad_id"].get<std::string>();
  if (j.contains("adv")) r.advertiser_domain = j["adv"].get<std::string>();
  return r;
}

class ImpressionSink {
 public:
  virtual ~ImpressionSink() = default;
  virtual void append(const ImpressionRecord& r) = 0;
};

class NdjsonLogWriter : public ImpressionSink {
 public:
  explicit NdjsonLogWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);
    if (!out_) throw std::runtime_error("cannot open log for writing: " + path.string());
  }
  void append(const ImpressionRecord& r) override { out_ << impression_to_json(r).dump() << "\n"; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

class VectorSink : public ImpressionSink {
 public:
  void append(const ImpressionRecord& r) override { records.push_back(r); }
  std::vector<ImpressionRecord> records;
};

inline std::vector<ImpressionRecord> load_impression_log(const std::filesystem::path& path) {
  std::vector<ImpressionRecord> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log: " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(impression_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

struct RunSummary {
  long long visits_done = 0;
  long long visits_failed = 0;
  long long elements = 0;
  long long ad_impressions = 0;
  long long distinct_ads = 0;
  long long resolve_failures = 0;

  std::string to_key_values() const {
    std::string out;
    out += "visits_done=" + std::to_string(visits_done) + "\n";
    out += "visits_failed=" + std::to_string(visits_failed) + "\n";
    out += "elements=" + std::to_string(elements) + "\n";
    out += "ad_impressions=" + std::to_string(ad_impressions) + "\n";
    out += "distinct_ads=" + std::to_string(distinct_ads) + "\n";
    out += "resolve_failures=" + std::to_string(resolve_failures) + "\n";
    return out;
  }
};

struct CrawlContext {
  PageSource* source = nullptr;
  const Catalog* catalog = nullptr;  // contamination footprints; may be null
  const FilterList* filters = nullptr;
  const DimensionList* dims = nullptr;
  const SuffixTable* suffixes = nullptr;
  RedirectFetcher* resolver = nullptr;      // optional landing resolution
  ResolverCache* resolver_cache = nullptr;  // optional, shared across jobs
  ImpressionSink* sink = nullptr;
  MissLog* miss_log = nullptr;
  // Called for every record in commit (plan) order, after sink->append.
  std::function<void(const ImpressionRecord&)> on_record;
  int timeout_s = 70;
  int retries = 2;
  int64_t ts_epoch = 1700000000;  // virtual clock base; 1s per visit
};

namespace detail {

// Flushes per-job record buffers in job-index order regardless of completion
// order.
class OrderedCommitter {
 public:
  OrderedCommitter(CrawlContext& ctx, RunSummary& summary)
      : ctx_(&ctx), summary_(&summary) {}

  void commit(size_t job_index, std::vector<ImpressionRecord>&& records,
              long long visits_done, long long visits_failed, long long resolve_failures) {
    std::lock_guard lock(mu_);
    parked_.emplace(job_index, Parked{std::move(records), visits_done, visits_failed,
                                      resolve_failures});
    while (true) {
      auto it = parked_.find(next_);
      if (it == parked_.end()) break;
      flush(it->second);
      parked_.erase(it);
      ++next_;
    }
  }

  long long distinct_ads() const { return static_cast<long long>(ads_.size()); }

 private:
  struct Parked {
    std::vector<ImpressionRecord> records;
    long long visits_done;
    long long visits_failed;
    long long resolve_failures;
  };

  void flush(Parked& p) {
    for (const auto& r : p.records) {
      if (ctx_->sink) ctx_->sink->append(r);
      if (ctx_->on_record) ctx_->on_record(r);
      ++summary_->elements;
      if (r.classification.is_ad) {
        ++summary_->ad_impressions;
        if (r.ad_id) ads_.insert(*r.ad_id);
      }
    }
    summary_->visits_done += p.visits_done;
    summary_->visits_failed += p.visits_failed;
    summary_->resolve_failures += p.resolve_failures;
  }

  CrawlContext* ctx_;
  RunSummary* summary_;
  std::mutex mu_;
  std::map<size_t, Parked> parked_;
  size_t next_ = 0;
  std::set<std::string> ads_;
};

}  // namespace detail

inline RunSummary execute_plan(const CrawlPlan& plan, std::map<std::string, Persona> personas,
                               CrawlContext& ctx) {
  plan.validate();
  if (!ctx.source || !ctx.filters || !ctx.dims || !ctx.suffixes)
    throw std::runtime_error("execute_plan: incomplete context");

  // Jobs sharing a persona form an ordered group; groups are the unit of
  // worker scheduling.
  std::vector<std::vector<size_t>> groups;
  std::unordered_map<std::string, size_t> group_of;
  for (size_t i = 0; i < plan.jobs.size(); ++i) {
    const std::string& pid = plan.jobs[i].pair.persona;
    auto it = group_of.find(pid);
    if (it == group_of.end()) {
      group_of.emplace(pid, groups.size());
      groups.push_back({i});
    } else {
      groups[it->second].push_back(i);
    }
    if (!personas.count(pid)) {
      if (pid == kEmptyPersonaId) {
        personas.emplace(pid, empty_persona());
      } else {
        throw std::runtime_error("plan references unknown persona: " + pid);
      }
    }
  }

  // One politeness lock per website: at most one in-flight fetch each.
  std::map<std::string, std::unique_ptr<std::mutex>> site_locks;
  for (const auto& j : plan.jobs)
    site_locks.try_emplace(j.pair.website, std::make_unique<std::mutex>());

  RunSummary summary;
  detail::OrderedCommitter committer(ctx, summary);
  std::mutex resolver_mu;
  std::atomic<size_t> next_group{0};
  std::vector<std::string> worker_errors;
  std::mutex error_mu;

  auto resolve_domain =
      [&](const std::string& landing_url) -> std::pair<std::optional<std::string>, bool> {
    if (!ctx.resolver) return {std::nullopt, false};
    ResolvedLanding resolved;
    {
      std::lock_guard lock(resolver_mu);
      if (ctx.resolver_cache) {
        if (const ResolvedLanding* hit = ctx.resolver_cache->find(landing_url)) {
          resolved = *hit;
          if (resolved.final_url)
            return {ctx.suffixes->registrable_domain(url_host(*resolved.final_url)), false};
          return {std::nullopt, false};  // cached failure: not a fresh one
        }
      }
    }
    resolved = resolve_landing(landing_url, *ctx.resolver);
    {
      std::lock_guard lock(resolver_mu);
      if (ctx.resolver_cache) ctx.resolver_cache->put(resolved);
    }
    if (resolved.final_url)
      return {ctx.suffixes->registrable_domain(url_host(*resolved.final_url)), false};
    return {std::nullopt, true};
  };

  auto run_job = [&](size_t job_index) {
    const CrawlJob& job = plan.jobs[job_index];
    Persona& persona = personas.at(job.pair.persona);
    const WebsiteSpec* site = ctx.catalog ? ctx.catalog->find_website(job.pair.website) : nullptr;
    std::vector<ImpressionRecord> records;
    long long done = 0, failed = 0, resolve_failures = 0;

    for (int rep = 1; rep <= job.strategy.beta; ++rep) {
      reset_to_snapshot(persona);
      for (int visit = 1; visit <= job.strategy.alpha; ++visit) {
        int ordinal = (rep - 1) * job.strategy.alpha + visit;
        FetchOutcome outcome;
        {
          std::lock_guard site_lock(*site_locks.at(job.pair.website));
          outcome = fetch_page(*ctx.source, job.pair.website, persona, ordinal, ctx.timeout_s,
                               ctx.retries);
        }
        if (!outcome.page) {
          ++failed;
          if (ctx.miss_log)
            ctx.miss_log->record({job.pair.website, job.pair.persona, ordinal, outcome.attempts,
                                  *outcome.error});
          continue;
        }
        ++done;
        const PageDocument& page = *outcome.page;
        for (auto& el : extract_visual_elements(page)) {
          ImpressionRecord r;
          r.website = job.pair.website;
          r.persona = job.pair.persona;
          r.strategy = job.strategy.name;
          r.repetition = rep;
          r.visit = visit;
          r.timestamp = ctx.ts_epoch + static_cast<int64_t>(job_index) * (1 << 20) + ordinal;
          r.page_url = page.url;
          r.element = el;
          r.classification = classify(el, page.domain, *ctx.filters, *ctx.dims, *ctx.suffixes);
          if (r.classification.is_ad) {
            r.ad_id = el.source_url;
            if (el.landing_url) {
              auto [domain, fresh_failure] = resolve_domain(*el.landing_url);
              r.advertiser_domain = domain;
              if (fresh_failure) ++resolve_failures;
            }
          }
          records.push_back(std::move(r));
        }
        if (site) contaminate(persona, *site);
      }
    }
    committer.commit(job_index, std::move(records), done, failed, resolve_failures);
  };

  auto worker = [&] {
    while (true) {
      size_t g = next_group.fetch_add(1);
      if (g >= groups.size()) return;
      for (size_t job_index : groups[g]) {
        try {
          run_job(job_index);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mu);
          worker_errors.push_back(e.what());
          return;
        }
      }
    }
  };

  int n_workers = std::min<int>(plan.worker_count, static_cast<int>(groups.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!worker_errors.empty()) throw std::runtime_error("crawl failed: " + worker_errors.front());

  summary.distinct_ads = committer.distinct_ads();
  return summary;
}

// Visits every (website, persona) pair `visits` times and aggregates the
// distinct ads seen per pair. Pairs that showed nothing still appear with an
// empty set.
inline ObservationSet survey_pass(const std::vector<std::string>& websites,
                                  const std::vector<Persona>& personas, int visits,
                                  CrawlContext& ctx, int worker_count = 1) {
  if (websites.empty() || personas.empty()) throw EmptySample();
  CrawlPlan plan;
  plan.worker_count = worker_count;
  StrategySpec strat{visits, 1, "survey"};
  std::map<std::string, Persona> pool;
  for (const auto& p : personas) pool.emplace(p.id, p);
  for (const auto& w : websites)
    for (const auto& p : personas) plan.jobs.push_back({{w, p.id}, strat});

  ObservationSet obs;
  for (const auto& w : websites)
    for (const auto& p : personas) obs.add_pair(w, p.id);

  auto outer = ctx.on_record;
  ctx.on_record = [&](const ImpressionRecord& r) {
    if (r.classification.is_ad && r.ad_id) obs.add(r.website, r.persona, *r.ad_id);
    if (outer) outer(r);
  };
  execute_plan(plan, std::move(pool), ctx);
  ctx.on_record = outer;
  return obs;
}

// --- Arrival of new ads --------------------------------------------------------

struct InsufficientData : std::runtime_error {
  InsufficientData() : std::runtime_error("not enough tail points for a fit") {}
};

struct ArrivalCurve {
  std::vector<double> mean_new;     // index = visit ordinal - 1, averaged over pairs
  std::vector<long long> total_new; // summed over pairs
  size_t pair_count = 0;
  LinearFit tail_fit;               // over ordinals in [fit_lo, fit_hi]
  int fit_lo = 10;
  int fit_hi = 0;
};

// Mean count of first-seen distinct ads per visit ordinal for one strategy.
// The ordinal of (repetition r, visit v) is (r-1)*alpha + v.
inline ArrivalCurve arrival_curve(const std::vector<ImpressionRecord>& log,
                                  const std::string& strategy, int alpha,
                                  int fit_lo = 10) {
  std::map<PairKey, std::set<std::string>> seen;
  std::map<PairKey, char> pairs;
  int max_ord = 0;
  std::vector<long long> per_ordinal;
  // Records within a pair appear in visit order; per-pair first sightings are
  // well defined regardless of how pairs interleave in the log.
  std::map<PairKey, std::map<int, std::vector<const ImpressionRecord*>>> by_pair;
  for (const auto& r : log) {
    if (r.strategy != strategy) continue;
    int ord = (r.repetition - 1) * alpha + r.visit;
    max_ord = std::max(max_ord, ord);
    pairs[{r.website, r.persona}] = 1;
    if (r.classification.is_ad && r.ad_id)
      by_pair[{r.website, r.persona}][ord].push_back(&r);
  }
  if (pairs.empty()) throw InsufficientData();
  per_ordinal.assign(static_cast<size_t>(max_ord), 0);
  for (auto& [pair, by_ord] : by_pair) {
    auto& pair_seen = seen[pair];
    for (auto& [ord, recs] : by_ord) {
      for (const ImpressionRecord* r : recs) {
        if (pair_seen.insert(*r->ad_id).second) ++per_ordinal[static_cast<size_t>(ord - 1)];
      }
    }
  }

  ArrivalCurve curve;
  curve.pair_count = pairs.size();
  curve.total_new = per_ordinal;
  curve.mean_new.resize(per_ordinal.size());
  for (size_t i = 0; i < per_ordinal.size(); ++i)
    curve.mean_new[i] =
        static_cast<double>(per_ordinal[i]) / static_cast<double>(curve.pair_count);
  curve.fit_lo = fit_lo;
  curve.fit_hi = max_ord;

  std::vector<double> xs, ys;
  for (int ord = fit_lo; ord <= max_ord; ++ord) {
    xs.push_back(ord);
    ys.push_back(curve.mean_new[static_cast<size_t>(ord - 1)]);
  }
  if (xs.size() < 2) throw InsufficientData();
  curve.tail_fit = linear_fit(xs, ys);
  return curve;
}

}  // namespace adlens
