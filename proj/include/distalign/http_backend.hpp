#pragma once

#include <chrono>
#include <string>

#include "distalign/backend.hpp"

namespace distalign {

struct HttpBackendOptions {
  std::string endpoint;  // base URL, e.g. "http://127.0.0.1:8080"
  std::string auth_env;  // env var holding a bearer token; empty = no auth
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::milliseconds max_backoff{2000};
  std::chrono::seconds timeout{30};
};

// JSON-over-HTTP scoring client: POST {endpoint}/score with
// {"model", "context", "continuation"}, expecting
// {"tokens": [{"text", "logprob"}, ...]}. Transport failures and 5xx/429
// responses are retried with exponential backoff up to max_attempts, then
// surfaced as BackendError. Token reconstruction is checked on every
// response.
class HttpBackend : public ScoringBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

 private:
  ScoreResponse do_score(const ScoreRequest& request) override;

  HttpBackendOptions options_;
};

}  // namespace distalign
