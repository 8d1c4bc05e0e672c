#include <catch2/catch_amalgamated.hpp>

#include <regex>

#include "adlens/classify.hpp"
#include "adlens/filter_list.hpp"
#include "adlens/rng.hpp"

using namespace adlens;

namespace {

VisualElement element(std::string src, std::optional<std::string> iframe = {},
                      std::optional<std::string> landing = {},
                      std::optional<std::string> divc = {}, int w = 300, int h = 250) {
  VisualElement el;
  el.source_url = std::move(src);
  el.iframe_url = std::move(iframe);
  el.landing_url = std::move(landing);
  el.div_class = std::move(divc);
  el.width = w;
  el.height = h;
  return el;
}

// Reference matcher: translates one rule into a std::regex and scans a single
// field. Independent of the production matcher.
bool regex_oracle(const std::string& rule, const std::string& field) {
  std::string text;
  for (char c : field) text += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const std::string sep_class = "(?:[^a-z0-9.%_-]|$)";
  auto translate = [&](const std::string& body) {
    std::string re;
    for (char c : body) {
      char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (lc == '*') {
        re += ".*";
      } else if (lc == '^') {
        re += sep_class;
      } else if (std::isalnum(static_cast<unsigned char>(lc))) {
        re += lc;
      } else {
        re += "\\";
        re += lc;
      }
    }
    return re;
  };
  std::string re;
  if (rule.rfind("||", 0) == 0) {
    std::string body = rule.substr(2);
    size_t cut = body.find_first_of("^/*");
    std::string domain = body.substr(0, cut);
    std::string tail = cut == std::string::npos ? "" : body.substr(cut);
    re = "^[a-z]+://([a-z0-9.-]*\\.)?" + translate(domain) + translate(tail);
  } else {
    re = translate(rule);
  }
  return std::regex_search(text, std::regex(re));
}

}  // namespace

TEST_CASE("empty filter list matches nothing") {
  FilterList list;
  auto [hit, rule] = list.match_element(element("http://adserver.example/img/1.gif"));
  CHECK_FALSE(hit);
  CHECK_FALSE(rule.has_value());
}

TEST_CASE("domain anchor matches host and subdomains") {
  FilterList list = FilterList::parse({"||adserver.example^"});
  CHECK(list.matches("http://adserver.example/img/1.gif"));
  CHECK(list.matches("https://static.adserver.example/x"));
  CHECK(list.matches("http://adserver.example"));  // '^' may match end of address
  CHECK_FALSE(list.matches("http://notadserver.example/img/1.gif"));
  CHECK_FALSE(list.matches("http://adserver.example.evil.com/"));
  CHECK_FALSE(list.matches("just a string, not a url"));
}

TEST_CASE("a rule can match on the div class alone") {
  FilterList list = FilterList::parse({"ad-slot"});
  auto el = element("http://clean.example/img.png", std::nullopt, "http://clean2.example/x",
                    "ad-slot slot-3");
  auto [hit, rule] = list.match_element(el);
  CHECK(hit);
  CHECK(rule == "ad-slot");
}

TEST_CASE("four-field contract: iframe and landing URLs are tested") {
  FilterList list = FilterList::parse({"||tracker.example^"});
  CHECK(list.match_element(element("http://clean.example/a.png",
                                   "http://serve.tracker.example/frame")).first);
  CHECK(list.match_element(element("http://clean.example/a.png", std::nullopt,
                                   "http://tracker.example/c?x=1")).first);
  CHECK_FALSE(list.match_element(element("http://clean.example/a.png")).first);
}

TEST_CASE("comments and blanks are ignored; first match wins") {
  FilterList list = FilterList::parse({"! comment", "", "/banners/", "banner"});
  CHECK(list.size() == 2);
  auto [hit, rule] = list.match_element(element("http://x.example/banners/1.png"));
  CHECK(hit);
  CHECK(rule == "/banners/");
}

TEST_CASE("wildcard rules") {
  FilterList list = FilterList::parse({"/ads/*/creative"});
  CHECK(list.matches("http://x.example/ads/77/creative.png"));
  CHECK(list.matches("http://x.example/ads//creative.png"));
  CHECK_FALSE(list.matches("http://x.example/ads/77/banner.png"));
}

TEST_CASE("filter engine agrees with the regex reference on random inputs") {
  std::vector<std::string> rules = {
      "||adserver.example^",  "||nexus-ads.example^/frame", "banner",
      "/creatives/",          "ad*img",                     "||click.hub.example^",
      "track^",               "*/promo/*",
  };
  std::vector<std::string> hosts = {"adserver.example",   "static.adserver.example",
                                    "nexus-ads.example",  "serve.nexus-ads.example",
                                    "clean.example",      "click.hub.example",
                                    "hub.example",        "adserver.example.evil.test"};
  std::vector<std::string> paths = {"/img/1.gif", "/creatives/c7.png", "/frame?slot=2",
                                    "/banner/x",  "/promo/sale/9",     "/track?x=1",
                                    "/adX1img",   "/", ""};
  Rng rng(99);
  std::vector<std::string> fields;
  for (const auto& h : hosts)
    for (const auto& p : paths) fields.push_back("http://" + h + p);
  fields.push_back("ad-slot slot-1");
  fields.push_back("content");
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string& rule = rules[rng.below(rules.size())];
    const std::string& field = fields[rng.below(fields.size())];
    FilterList single = FilterList::parse({rule});
    INFO("rule=" << rule << " field=" << field);
    REQUIRE(single.matches(field) == regex_oracle(rule, field));
  }
}

TEST_CASE("dimension list membership") {
  const DimensionList& dims = DimensionList::standard();
  REQUIRE(dims.size() == 25);
  CHECK(dimension_test(dims, element("http://x/", {}, {}, {}, 728, 90)));
  CHECK_FALSE(dimension_test(dims, element("http://x/", {}, {}, {}, 727, 90)));

  SECTION("every shipped entry passes; random non-entries fail") {
    for (const auto& [w, h] : dims.entries())
      CHECK(dimension_test(dims, element("http://x/", {}, {}, {}, w, h)));
    Rng rng(5);
    int checked = 0;
    while (checked < 1000) {
      int w = static_cast<int>(rng.range(1, 1200));
      int h = static_cast<int>(rng.range(1, 1200));
      if (dims.entries().count({w, h})) continue;
      CHECK_FALSE(dimension_test(dims, element("http://x/", {}, {}, {}, w, h)));
      ++checked;
    }
  }

  SECTION("file load round-trips the shipped list") {
    DimensionList fromFile =
        DimensionList::load_file(std::string(ADLENS_DATA_DIR) + "/dimensions.txt");
    CHECK(fromFile.entries() == dims.entries());
  }
}

TEST_CASE("self-ad test uses registrable domains") {
  SuffixTable suffixes;
  SECTION("absent landing fails") {
    CHECK_FALSE(self_ad_test(element("http://x/"), "news.example", suffixes));
  }
  SECTION("external landing passes") {
    CHECK(self_ad_test(element("http://x/", {}, "http://shop.other/p"), "news.example",
                       suffixes));
  }
  SECTION("subdomain of the page domain is still a self ad") {
    CHECK_FALSE(
        self_ad_test(element("http://x/", {}, "http://b.a.example/p"), "a.example", suffixes));
  }
  SECTION("two-level suffixes") {
    CHECK(suffixes.registrable_domain("shop.brand.co.uk") == "brand.co.uk");
    CHECK(suffixes.registrable_domain("a.b.plain.example") == "plain.example");
    CHECK_FALSE(self_ad_test(element("http://x/", {}, "http://cdn.brand.co.uk/p"),
                             "www.brand.co.uk", suffixes));
    CHECK(self_ad_test(element("http://x/", {}, "http://other.co.uk/p"), "brand.co.uk",
                       suffixes));
  }
}

TEST_CASE("classification is the conjunction of the three tests") {
  FilterList list = FilterList::parse({"||adserver.example^"});
  const DimensionList& dims = DimensionList::standard();
  SuffixTable suffixes;

  auto ad = element("http://adserver.example/c1.png", "http://serve.adserver.example/f",
                    "http://brand.example/offer", "ad-slot", 728, 90);
  Classification c = classify(ad, "news.example", list, dims, suffixes);
  CHECK(c.is_ad);
  CHECK(c.filter_pass);
  CHECK(c.dimension_pass);
  CHECK(c.self_ad_pass);
  CHECK(c.matched_rule == "||adserver.example^");

  SECTION("non-standard size fails only the dimension test") {
    auto decoy = ad;
    decoy.width = 643;
    decoy.height = 412;
    c = classify(decoy, "news.example", list, dims, suffixes);
    CHECK_FALSE(c.is_ad);
    CHECK(c.filter_pass);
    CHECK_FALSE(c.dimension_pass);
    CHECK(c.self_ad_pass);
  }
  SECTION("same-domain landing fails only the self-ad test") {
    auto self = ad;
    self.landing_url = "http://news.example/subscribe";
    c = classify(self, "news.example", list, dims, suffixes);
    CHECK_FALSE(c.is_ad);
    CHECK(c.filter_pass);
    CHECK(c.dimension_pass);
    CHECK_FALSE(c.self_ad_pass);
  }
  SECTION("is_ad equals the conjunction on random pass patterns") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      auto el = ad;
      if (rng.below(2)) el.source_url = "http://clean.example/a.png";
      if (rng.below(2)) el.width = 111;
      if (rng.below(2)) el.landing_url = "http://news.example/self";
      el.iframe_url.reset();
      c = classify(el, "news.example", list, dims, suffixes);
      REQUIRE(c.is_ad == (c.filter_pass && c.dimension_pass && c.self_ad_pass));
    }
  }
}
