#pragma once

// Landing-page resolution: follow an ad click's redirect chain to the final
// advertiser URL. Blocked or looping chains fall back to decoding an absolute
// URL embedded in the original query string; otherwise the resolution fails.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>
#include <condition_variable>

#include "adlens/text.hpp"

namespace adlens {

// Outcome of fetching one URL while chasing redirects.
struct RedirectStep {
  enum class Kind { Final, Redirect, Blocked } kind = Kind::Final;
  std::string location;  // set for Redirect
};

// Injectable fetch transport. Implementations: the simulator's resolver, the
// HTTP client in http_fetcher.hpp, and test fakes.
class RedirectFetcher {
 public:
  virtual ~RedirectFetcher() = default;
  virtual RedirectStep fetch(const std::string& url) = 0;
};

struct ResolvedLanding {
  std::string original_url;
  std::optional<std::string> final_url;  // absent iff method == Failed
  int hop_count = 0;
  enum class Method { HttpChain, QueryDecode, Failed } method = Method::Failed;
};

inline std::string to_string(ResolvedLanding::Method m) {
  switch (m) {
    case ResolvedLanding::Method::HttpChain: return "http-chain";
    case ResolvedLanding::Method::QueryDecode: return "query-decode";
    case ResolvedLanding::Method::Failed: return "failed";
  }
  return "failed";
}

inline ResolvedLanding::Method landing_method_from(const std::string& s) {
  if (s == "http-chain") return ResolvedLanding::Method::HttpChain;
  if (s == "query-decode") return ResolvedLanding::Method::QueryDecode;
  if (s == "failed") return ResolvedLanding::Method::Failed;
  throw std::runtime_error("bad landing method: " + s);
}

namespace detail {

inline std::optional<std::string> decode_embedded_url(const std::string& url) {
  auto parts = parse_url(url);
  if (!parts || parts->query.empty()) return std::nullopt;
  for (const auto& [key, value] : query_params(parts->query)) {
    (void)key;
    if (value.rfind("http://", 0) == 0 || value.rfind("https://", 0) == 0) return value;
  }
  return std::nullopt;
}

}  // namespace detail

// Follows redirects up to max_hops. Loops and hop-limit overruns downgrade to
// the query-decode fallback, as do blocked fetches. Terminates on all inputs.
inline ResolvedLanding resolve_landing(const std::string& url, RedirectFetcher& fetcher,
                                       int max_hops = 10) {
  ResolvedLanding out;
  out.original_url = url;
  std::unordered_set<std::string> visited;
  std::string current = url;
  int hops = 0;
  bool broken = false;
  while (true) {
    if (visited.count(current)) { broken = true; break; }  // redirect loop
    visited.insert(current);
    RedirectStep step = fetcher.fetch(current);
    if (step.kind == RedirectStep::Kind::Blocked) { broken = true; break; }
    if (step.kind == RedirectStep::Kind::Final) {
      out.final_url = current;
      out.hop_count = hops;
      out.method = ResolvedLanding::Method::HttpChain;
      return out;
    }
    if (hops >= max_hops) { broken = true; break; }
    current = step.location;
    ++hops;
  }
  if (broken) {
    if (auto embedded = detail::decode_embedded_url(url)) {
      out.final_url = *embedded;
      out.hop_count = hops;
      out.method = ResolvedLanding::Method::QueryDecode;
      return out;
    }
  }
  out.hop_count = hops;
  out.method = ResolvedLanding::Method::Failed;
  return out;
}

// --- Resolver cache ----------------------------------------------------------

// File format: original_url<TAB>final_url<TAB>hops<TAB>method. final_url is
// empty for failed resolutions.
class ResolverCache {
 public:
  bool contains(const std::string& url) const { return entries_.count(url) != 0; }

  const ResolvedLanding* find(const std::string& url) const {
    auto it = entries_.find(url);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void put(const ResolvedLanding& r) { entries_[r.original_url] = r; }
  size_t size() const { return entries_.size(); }
  const std::map<std::string, ResolvedLanding>& entries() const { return entries_; }

  std::string serialize() const {
    std::string out;
    for (const auto& [url, r] : entries_) {
      out += url + "\t" + (r.final_url ? *r.final_url : "") + "\t" +
             std::to_string(r.hop_count) + "\t" + to_string(r.method) + "\n";
    }
    return out;
  }

  static ResolverCache parse(const std::vector<std::string>& lines) {
    ResolverCache cache;
    for (const auto& line : lines) {
      if (line.empty()) continue;
      auto f = split(line, '\t');
      if (f.size() != 4) throw std::runtime_error("bad resolver cache line: " + line);
      ResolvedLanding r;
      r.original_url = f[0];
      if (!f[1].empty()) r.final_url = f[1];
      r.hop_count = std::stoi(f[2]);
      r.method = landing_method_from(f[3]);
      cache.put(r);
    }
    return cache;
  }

  static ResolverCache load_file(const std::filesystem::path& p) {
    return parse(read_lines(p));
  }
  void save_file(const std::filesystem::path& p) const { write_file(p, serialize()); }

 private:
  std::map<std::string, ResolvedLanding> entries_;
};

// Resolves a batch of URLs with bounded concurrency and per-domain politeness
// (at most `per_domain` outstanding requests per registrable host).
inline ResolverCache resolve_all(const std::vector<std::string>& urls, RedirectFetcher& fetcher,
                                 int max_hops = 10, int workers = 4, int per_domain = 2) {
  ResolverCache cache;
  std::mutex mu;
  std::condition_variable cv;
  std::unordered_map<std::string, int> in_flight;
  size_t next = 0;

  auto worker = [&] {
    while (true) {
      std::string url;
      std::string host;
      {
        std::unique_lock lock(mu);
        while (true) {
          if (next >= urls.size()) return;
          url = urls[next];
          host = url_host(url);
          if (in_flight[host] < per_domain) {
            ++next;
            ++in_flight[host];
            break;
          }
          cv.wait(lock);
        }
      }
      ResolvedLanding r = resolve_landing(url, fetcher, max_hops);
      {
        std::lock_guard lock(mu);
        cache.put(r);
        --in_flight[host];
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  for (int i = 0; i < std::max(1, workers); ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return cache;
}

}  // namespace adlens
