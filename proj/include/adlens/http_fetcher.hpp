#pragma once

// RedirectFetcher backed by a real HTTP client. Follows nothing itself; each
// fetch reports the single step (final, redirect, or blocked) so
// resolve_landing stays in charge of hop limits and loop detection.

#include <string>

#include <httplib.h>

#include "adlens/landing.hpp"
#include "adlens/text.hpp"

namespace adlens {

class HttpRedirectFetcher : public RedirectFetcher {
 public:
  explicit HttpRedirectFetcher(int timeout_s = 10) : timeout_s_(timeout_s) {}

  RedirectStep fetch(const std::string& url) override {
    auto parts = parse_url(url);
    if (!parts || (parts->scheme != "http" && parts->scheme != "https"))
      return {RedirectStep::Kind::Blocked, ""};
    httplib::Client client(parts->scheme + "://" + parts->host);
    client.set_follow_location(false);
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    std::string target = parts->path.empty() ? "/" : parts->path;
    if (!parts->query.empty()) target += "?" + parts->query;
    auto res = client.Get(target);
    if (!res) return {RedirectStep::Kind::Blocked, ""};
    if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
      std::string location = res->get_header_value("Location");
      if (location.rfind("http://", 0) != 0 && location.rfind("https://", 0) != 0) {
        // Relative redirect: resolve against the current origin.
        if (!location.empty() && location[0] != '/') location = "/" + location;
        location = parts->scheme + "://" + parts->host + location;
      }
      return {RedirectStep::Kind::Redirect, location};
    }
    return {RedirectStep::Kind::Final, ""};
  }

 private:
  int timeout_s_;
};

}  // namespace adlens
