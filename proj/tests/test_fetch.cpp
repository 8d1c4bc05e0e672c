#include <catch2/catch_amalgamated.hpp>

#include "adlens/fetch.hpp"
#include "support.hpp"

using namespace adlens;
using namespace testsupport;

namespace {

// Plays back a scripted sequence of outcomes, then succeeds forever.
class ScriptedSource : public PageSource {
 public:
  explicit ScriptedSource(std::vector<std::optional<FetchError>> script)
      : script_(std::move(script)) {}

  SourceReply load(const std::string& domain, const Persona&, int, int) override {
    ++calls;
    std::optional<FetchError> step;
    if (cursor_ < script_.size()) step = script_[cursor_++];
    SourceReply r;
    if (step) {
      r.error = *step;
      return r;
    }
    r.url = "http://" + domain + "/";
    r.html = "<html><body><p>ok</p></body></html>";
    return r;
  }

  int calls = 0;

 private:
  std::vector<std::optional<FetchError>> script_;
  size_t cursor_ = 0;
};

Catalog one_site_catalog() {
  Catalog cat;
  cat.websites.push_back(site("news1.example", 2, 1));
  cat.advertisers.push_back(advertiser("brand1.example"));
  for (int i = 0; i < 6; ++i)
    cat.campaigns.push_back(campaign("c" + std::to_string(i), "brand1.example"));
  cat.validate();
  return cat;
}

}  // namespace

TEST_CASE("simulator source always succeeds on the first attempt") {
  Catalog cat = one_site_catalog();
  EcosystemState state(cat, 1);
  SimulatorSource source(state);
  Persona p = persona_with("solo", {"Autos"});
  auto outcome = fetch_page(source, "news1.example", p, 1);
  REQUIRE(outcome.page.has_value());
  CHECK(outcome.attempts == 1);
  CHECK_FALSE(outcome.error.has_value());
  CHECK(outcome.page->domain == "news1.example");
  CHECK_FALSE(extract_visual_elements(*outcome.page).empty());
}

TEST_CASE("two timeouts then success: page returned after two retries") {
  ScriptedSource source({FetchError::Timeout, FetchError::Timeout});
  Persona p = persona_with("solo", {"Autos"});
  auto outcome = fetch_page(source, "news1.example", p, 1, 70, 2);
  REQUIRE(outcome.page.has_value());
  CHECK(outcome.attempts == 3);
  CHECK(source.calls == 3);
}

TEST_CASE("three timeouts exhaust the attempt budget") {
  ScriptedSource source({FetchError::Timeout, FetchError::Timeout, FetchError::Timeout});
  Persona p = persona_with("solo", {"Autos"});
  auto outcome = fetch_page(source, "news1.example", p, 1, 70, 2);
  CHECK_FALSE(outcome.page.has_value());
  CHECK(outcome.attempts == 3);
  CHECK(outcome.error == FetchError::Timeout);
}

TEST_CASE("a terminal failure is not retried") {
  ScriptedSource source({FetchError::FetchFailed});
  Persona p = persona_with("solo", {"Autos"});
  auto outcome = fetch_page(source, "news1.example", p, 1, 70, 2);
  CHECK_FALSE(outcome.page.has_value());
  CHECK(outcome.attempts == 1);
  CHECK(outcome.error == FetchError::FetchFailed);
}

TEST_CASE("page loss under per-attempt faults matches the cubed fault rate") {
  Catalog cat = one_site_catalog();
  EcosystemState state(cat, 1);
  state.set_keep_ground_truth(false);
  SimulatorSource inner(state);
  const double fault = 0.2;  // high rate so the cubed loss is observable
  FaultInjectingSource source(inner, fault, 99);
  Persona p = persona_with("solo", {"Autos"});

  const int kPages = 20000;
  int lost = 0;
  for (int v = 1; v <= kPages; ++v) {
    auto outcome = fetch_page(source, "news1.example", p, v, 70, 2);
    if (!outcome.page) ++lost;
  }
  double loss_rate = static_cast<double>(lost) / kPages;
  double expect = fault * fault * fault;  // lost only when all three attempts fail
  CHECK(loss_rate == Catch::Approx(expect).margin(0.004));
}

TEST_CASE("stored corpus source replays files by domain and visit") {
  auto root = scratch_dir("corpus");
  write_file(root / "news1.example" / "1.html",
             "<html><body><img src=\"http://x/a.png\" width=\"300\" height=\"250\"/>"
             "</body></html>");
  StoredCorpusSource source(root);
  Persona p = persona_with("solo", {"Autos"});

  auto hit = fetch_page(source, "news1.example", p, 1);
  REQUIRE(hit.page.has_value());
  CHECK(extract_visual_elements(*hit.page).size() == 1);

  auto miss = fetch_page(source, "news1.example", p, 2);
  CHECK_FALSE(miss.page.has_value());
  CHECK(miss.error == FetchError::FetchFailed);
}

TEST_CASE("miss log serializes one line per abandoned fetch") {
  MissLog log;
  log.record({"news1.example", "solo", 4, 3, FetchError::Timeout});
  log.record({"cook2.example", "EMPTY", 1, 1, FetchError::FetchFailed});
  std::string text = log.serialize();
  CHECK(text ==
        "news1.example\tsolo\t4\t3\ttimeout\n"
        "cook2.example\tEMPTY\t1\t1\tfetch-failed\n");
}
