#include <thread>

#include "bident/error.hpp"
#include "bident/scoring.hpp"
#include "httplib.h"

namespace bident {

namespace {

// Splits "http://host:port/base" into ("http://host:port", "/base").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("remote URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("remote URL scheme must be http or https: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (base.size() <= scheme_end + 3) throw ConfigError("remote URL has no host: " + url);
  return {base, path};
}

}  // namespace

RemoteScorer::RemoteScorer(RemoteOptions options)
    : Scorer(ScorerDescriptor{options.task, Backend::remote,
                              options.model_id.empty() ? options.url : options.model_id, 0}),
      options_(std::move(options)) {
  if (options_.max_attempts < 1) throw ConfigError("remote scorer needs at least one attempt");
  std::tie(scheme_host_port_, path_) = split_url(options_.url);
}

std::vector<LabelDistribution> RemoteScorer::do_score(std::span<const SequencePair> pairs) {
  using Kind = ScoringError::Kind;

  nlohmann::ordered_json body;
  body["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : pairs) body["pairs"].push_back({{"s1", p.s1}, {"s2", p.s2}});
  body["task"] = to_string(task());
  const std::string payload = body.dump();
  const std::string endpoint = path_ + "/score";

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    client.set_write_timeout(options_.read_timeout);
    if (options_.bearer_token) client.set_bearer_token_auth(*options_.bearer_token);

    requests_.fetch_add(1);
    auto res = client.Post(endpoint, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "server answered HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ScoringError(Kind::protocol, "remote scorer answered HTTP " + std::to_string(res->status) + ": " +
                                             res->body.substr(0, 200));
    }

    std::vector<LabelDistribution> out;
    try {
      auto reply = nlohmann::ordered_json::parse(res->body);
      const auto& dists = reply.at("distributions");
      if (!dists.is_array() || dists.size() != pairs.size()) {
        throw ScoringError(Kind::protocol, "remote scorer returned " + std::to_string(dists.size()) +
                                               " distributions for " + std::to_string(pairs.size()) + " pairs");
      }
      out.reserve(dists.size());
      for (const auto& d : dists) {
        std::vector<std::pair<std::string, double>> probs;
        for (const auto& [cls, p] : d.items()) probs.emplace_back(cls, p.get<double>());
        out.emplace_back(std::move(probs));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ScoringError(Kind::protocol, std::string("malformed remote response: ") + e.what());
    }
    return out;
  }
  throw ScoringError(Kind::backend_unavailable, "remote scorer " + options_.url + " unavailable after " +
                                                     std::to_string(options_.max_attempts) +
                                                     " attempts: " + last_error);
}

}  // namespace bident
