#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "distalign/errors.hpp"

namespace distalign {

enum class ModelVariant { base, instruct };

const char* to_string(ModelVariant v);
ModelVariant parse_variant(std::string_view s);

// Identity of one scored model. `endpoint` is either a base URL of a
// scoring service or the literal "table" for the file-backed backend.
struct ModelSpec {
  std::string name;
  std::string family;
  double parameter_count = 0.0;  // billions
  ModelVariant variant = ModelVariant::base;
  std::string endpoint;

  bool is_table() const { return endpoint == "table"; }
};

struct TokenLogprob {
  std::string text;
  double logprob = 0.0;  // nats
};

// One continuation-scoring request. template_id is not part of the wire
// body; it participates in cache keying so template changes invalidate
// cached scores naturally.
struct ScoreRequest {
  std::string model;
  std::string template_id;
  std::string context;
  std::string continuation;
};

// Per-token log-probabilities covering exactly the continuation text.
struct ScoreResponse {
  std::vector<TokenLogprob> tokens;

  double total_logprob() const;
  int token_count() const { return static_cast<int>(tokens.size()); }
};

// Throws BackendError unless the token texts concatenate to the
// requested continuation.
void check_reconstruction(const ScoreRequest& request,
                          const ScoreResponse& response);

// Scoring provider interface. score() counts every invocation, which is
// what cache tests observe.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;

  ScoreResponse score(const ScoreRequest& request) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_score(request);
  }

  std::uint64_t call_count() const {
    return calls_.load(std::memory_order_relaxed);
  }

 private:
  virtual ScoreResponse do_score(const ScoreRequest& request) = 0;

  std::atomic<std::uint64_t> calls_{0};
};

enum class TableFallback { error, uniform };

// Deterministic backend answering from a fixed (context, continuation) ->
// response table. Unknown requests either fail or score the continuation
// as a single token at log(1/vocab), per the fallback policy.
class TableBackend : public ScoringBackend {
 public:
  TableBackend() = default;
  explicit TableBackend(TableFallback fallback, int uniform_vocab = 0);

  void add(std::string context, std::string continuation,
           ScoreResponse response);
  std::size_t size() const { return entries_.size(); }

 private:
  ScoreResponse do_score(const ScoreRequest& request) override;

  std::map<std::pair<std::string, std::string>, ScoreResponse> entries_;
  TableFallback fallback_ = TableFallback::error;
  int uniform_vocab_ = 0;
};

// Loads a line-delimited JSON table file; every entry is checked for token
// reconstruction at load time.
std::unique_ptr<TableBackend> load_table_backend(
    const std::filesystem::path& path,
    TableFallback fallback = TableFallback::error, int uniform_vocab = 0);

std::string sha256_hex(std::string_view data);

// Collision-resistant key over (model, template_id, context, continuation).
std::string cache_key(const ScoreRequest& request);

// Append-only response cache persisted as line-delimited JSON. Entries are
// immutable once written; concurrent readers are fine and appends are
// serialized internally.
class ResponseCache {
 public:
  // In-memory only.
  ResponseCache() = default;
  // Loads existing entries from `file` if present; put() appends to it.
  explicit ResponseCache(std::filesystem::path file);

  std::optional<ScoreResponse> get(const std::string& key) const;
  void put(const std::string& key, const ScoreResponse& response);
  std::size_t size() const;

  // Content hash over sorted (key, response) pairs. Timestamps are
  // excluded so equal score sets hash equally across runs.
  std::string state_hash() const;

 private:
  mutable std::shared_mutex mutex_;
  std::filesystem::path file_;
  std::unordered_map<std::string, ScoreResponse> entries_;
};

// Cache-through wrapper. With a null inner backend it serves hits only and
// raises BackendError on a miss (offline / analyze mode).
class CachingBackend : public ScoringBackend {
 public:
  CachingBackend(ResponseCache& cache, ScoringBackend* inner)
      : cache_(cache), inner_(inner) {}

 private:
  ScoreResponse do_score(const ScoreRequest& request) override;

  ResponseCache& cache_;
  ScoringBackend* inner_;
};

}  // namespace distalign
