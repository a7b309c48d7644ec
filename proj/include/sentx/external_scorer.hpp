#pragma once

// HTTP client for a remote sentence-sentiment service.
//
// Request:  POST <endpoint> {"documents":[{"id":"1","text":...}]}
// Response: {"documents":[{"id":"1","positive":p,"neutral":u,"negative":n}]}
//           (the scores may also sit under a "confidenceScores" object)
//
// Endpoint and key come from SENTI_ENDPOINT and SENTI_KEY. Only plain http://
// endpoints are supported.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "sentx/error.hpp"
#include "sentx/sentiment.hpp"

namespace sentx {

struct ExternalScorerConfig {
  std::string endpoint;  // e.g. http://localhost:8080/sentiment
  std::string key;
  std::chrono::milliseconds timeout{10000};
  int max_in_flight = 4;
  // Reject triples whose raw sum is further than 0.01 from 1 instead of
  // renormalizing them.
  bool strict_sum = false;

  static ExternalScorerConfig from_env() {
    ExternalScorerConfig c;
    const char* ep = std::getenv("SENTI_ENDPOINT");
    const char* key = std::getenv("SENTI_KEY");
    if (!ep || !*ep) throw ValidationError("SENTI_ENDPOINT is not set");
    c.endpoint = ep;
    c.key = key ? key : "";
    return c;
  }
};

inline SentimentScore renormalize(double positive, double neutral, double negative, bool strict_sum) {
  for (double v : {positive, neutral, negative})
    if (!std::isfinite(v) || v < 0.0) throw TransportError("scorer returned a negative or non-finite confidence");
  const double sum = positive + neutral + negative;
  if (sum <= 0.0) throw TransportError("scorer returned an all-zero triple");
  if (strict_sum && std::abs(sum - 1.0) > 0.01)
    throw TransportError("scorer triple sums to " + std::to_string(sum) + ", not within 0.01 of 1");
  SentimentScore s{positive / sum, neutral / sum, negative / sum};
  // Pin the neutral mass so the triple sums to 1 up to rounding of one term.
  s.neutral = std::max(0.0, 1.0 - s.positive - s.negative);
  return s;
}

class ExternalScorer {
 public:
  explicit ExternalScorer(ExternalScorerConfig config)
      : config_(std::move(config)),
        slots_(std::make_unique<std::counting_semaphore<1024>>(std::clamp(config_.max_in_flight, 1, 1024))) {
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos || config_.endpoint.substr(0, scheme_end) != "http")
      throw ValidationError("external scorer endpoint must be an http:// URL: " + config_.endpoint);
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    host_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  }

  SentimentScore operator()(std::string_view text) const { return score(text); }

  SentimentScore score(std::string_view text) const {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<1024>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};

    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    nlohmann::json body = {{"documents", nlohmann::json::array({{{"id", "1"}, {"text", std::string(text)}}})}};
    httplib::Headers headers;
    if (!config_.key.empty()) headers.emplace("Ocp-Apim-Subscription-Key", config_.key);
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw TransportError("request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw TransportError("scorer returned HTTP " + std::to_string(res->status));

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
      const auto& doc = reply.at("documents").at(0);
      const auto& scores = doc.contains("confidenceScores") ? doc.at("confidenceScores") : doc;
      return renormalize(scores.at("positive").get<double>(), scores.at("neutral").get<double>(),
                         scores.at("negative").get<double>(), config_.strict_sum);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("scorer response does not match schema: ") + e.what());
    }
  }

  const ExternalScorerConfig& config() const { return config_; }

 private:
  ExternalScorerConfig config_;
  std::string host_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

// Wraps a shared client as a copyable SentenceScorer.
inline SentenceScorer make_external_scorer(std::shared_ptr<const ExternalScorer> client) {
  return [client = std::move(client)](std::string_view text) { return client->score(text); };
}

}  // namespace sentx
