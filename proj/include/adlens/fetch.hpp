#pragma once

// Page sources and the retrying fetch wrapper. A source serves serialized
// page markup for a (website, persona, visit); the simulator source renders
// live, the stored-corpus source replays captured files. Failed loads retry
// up to `retries` more times before the visit is abandoned and recorded in
// the miss log.

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adlens/ecosystem.hpp"
#include "adlens/page.hpp"
#include "adlens/persona.hpp"
#include "adlens/text.hpp"

namespace adlens {

enum class FetchError { Timeout, FetchFailed };

inline std::string to_string(FetchError e) {
  return e == FetchError::Timeout ? "timeout" : "fetch-failed";
}

struct SourceReply {
  std::optional<std::string> html;  // absent on error
  std::optional<std::string> url;
  FetchError error = FetchError::FetchFailed;
};

class PageSource {
 public:
  virtual ~PageSource() = default;
  // One attempt; honors timeout_s as its own budget where that applies.
  virtual SourceReply load(const std::string& website_domain, const Persona& persona,
                           int visit_index, int timeout_s) = 0;
};

// Renders pages from an ecosystem simulator; never fails, zero latency.
class SimulatorSource : public PageSource {
 public:
  explicit SimulatorSource(EcosystemState& state) : state_(&state) {}

  SourceReply load(const std::string& website_domain, const Persona& persona, int visit_index,
                   int /*timeout_s*/) override {
    PageDocument page = state_->render_page(website_domain, persona, visit_index);
    SourceReply r;
    r.url = page.url;
    r.html = serialize_page(page);
    return r;
  }

  EcosystemState& state() { return *state_; }

 private:
  EcosystemState* state_;
};

// Replays a captured corpus laid out as <root>/<domain>/<visit>.html.
class StoredCorpusSource : public PageSource {
 public:
  explicit StoredCorpusSource(std::filesystem::path root) : root_(std::move(root)) {}

  SourceReply load(const std::string& website_domain, const Persona& /*persona*/,
                   int visit_index, int /*timeout_s*/) override {
    std::filesystem::path p = root_ / website_domain / (std::to_string(visit_index) + ".html");
    SourceReply r;
    if (!std::filesystem::exists(p)) {
      r.error = FetchError::FetchFailed;
      return r;
    }
    r.html = read_file(p);
    r.url = "http://" + website_domain + "/";
    return r;
  }

 private:
  std::filesystem::path root_;
};

// Wraps a source and times out a deterministic fraction of attempts.
class FaultInjectingSource : public PageSource {
 public:
  FaultInjectingSource(PageSource& inner, double fault_rate, uint64_t seed)
      : inner_(&inner), fault_rate_(fault_rate), seed_(seed) {}

  SourceReply load(const std::string& website_domain, const Persona& persona, int visit_index,
                   int timeout_s) override {
    uint64_t attempt;
    {
      std::lock_guard lock(mu_);
      attempt = ++attempts_;
    }
    if (Rng::derive({seed_, 0xfa17ULL, attempt}).uniform() < fault_rate_) {
      SourceReply r;
      r.error = FetchError::Timeout;
      return r;
    }
    return inner_->load(website_domain, persona, visit_index, timeout_s);
  }

 private:
  PageSource* inner_;
  double fault_rate_;
  uint64_t seed_;
  std::mutex mu_;
  uint64_t attempts_ = 0;
};

// One line per abandoned fetch: website, persona, visit, attempts, error.
class MissLog {
 public:
  struct Entry {
    std::string website;
    std::string persona;
    int visit = 0;
    int attempts = 0;
    FetchError error = FetchError::FetchFailed;
  };

  void record(Entry e) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(e));
  }

  std::vector<Entry> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  std::string serialize() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& e : entries_) {
      out += e.website + "\t" + e.persona + "\t" + std::to_string(e.visit) + "\t" +
             std::to_string(e.attempts) + "\t" + to_string(e.error) + "\n";
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

struct FetchOutcome {
  std::optional<PageDocument> page;
  int attempts = 1;
  std::optional<FetchError> error;  // set when page absent
};

// Attempts a load, retrying timeouts up to `retries` more times. A terminal
// failure is recorded by the caller (the crawl proceeds regardless).
inline FetchOutcome fetch_page(PageSource& source, const std::string& website_domain,
                               const Persona& persona, int visit_index, int timeout_s = 70,
                               int retries = 2) {
  FetchOutcome out;
  FetchError last = FetchError::FetchFailed;
  for (int attempt = 1; attempt <= 1 + retries; ++attempt) {
    out.attempts = attempt;
    SourceReply reply = source.load(website_domain, persona, visit_index, timeout_s);
    if (reply.html) {
      out.page = parse_page(*reply.html, reply.url.value_or("http://" + website_domain + "/"));
      return out;
    }
    last = reply.error;
    if (last == FetchError::FetchFailed) break;  // terminal, no point retrying
  }
  out.error = last;
  return out;
}

}  // namespace adlens
