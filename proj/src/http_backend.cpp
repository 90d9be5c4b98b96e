#include "distalign/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace distalign {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    throw ValidationError("http backend needs an endpoint URL");
  }
  if (options_.max_attempts < 1) {
    throw ValidationError("http backend needs at least one attempt");
  }
}

ScoreResponse HttpBackend::do_score(const ScoreRequest& request) {
  json body;
  body["model"] = request.model;
  body["context"] = request.context;
  body["continuation"] = request.continuation;
  const std::string payload = body.dump();

  std::string bearer;
  if (!options_.auth_env.empty()) {
    if (const char* token = std::getenv(options_.auth_env.c_str())) {
      bearer = token;
    }
  }

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, options_.max_backoff);
    }

    httplib::Client client(options_.endpoint);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    if (!bearer.empty()) {
      client.set_bearer_token_auth(bearer);
    }

    auto result = client.Post("/score", payload, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "server returned status " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw BackendError("scoring endpoint returned status " +
                         std::to_string(result->status) + " for model '" +
                         request.model + "'");
    }

    json parsed;
    try {
      parsed = json::parse(result->body);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("unparseable scoring response: ") +
                         e.what());
    }
    if (!parsed.contains("tokens") || !parsed["tokens"].is_array() ||
        parsed["tokens"].empty()) {
      throw BackendError("scoring response lacks a non-empty 'tokens' array");
    }
    ScoreResponse response;
    for (const auto& t : parsed["tokens"]) {
      if (!t.contains("text") || !t.contains("logprob") ||
          !t["text"].is_string() || !t["logprob"].is_number()) {
        throw BackendError("scoring response token entries need string "
                           "'text' and numeric 'logprob'");
      }
      response.tokens.push_back(
          {t["text"].get<std::string>(), t["logprob"].get<double>()});
    }
    check_reconstruction(request, response);
    return response;
  }
  throw BackendError("scoring endpoint " + options_.endpoint + " failed after " +
                     std::to_string(options_.max_attempts) +
                     " attempts; last error: " + last_error);
}

}  // namespace distalign
