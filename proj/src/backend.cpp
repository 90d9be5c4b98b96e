#include "distalign/backend.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

namespace distalign {

using nlohmann::json;

const char* to_string(ModelVariant v) {
  return v == ModelVariant::base ? "base" : "instruct";
}

ModelVariant parse_variant(std::string_view s) {
  if (s == "base") {
    return ModelVariant::base;
  }
  if (s == "instruct") {
    return ModelVariant::instruct;
  }
  throw ValidationError("unknown model variant '" + std::string(s) + "'");
}

double ScoreResponse::total_logprob() const {
  double sum = 0.0;
  for (const auto& t : tokens) {
    sum += t.logprob;
  }
  return sum;
}

void check_reconstruction(const ScoreRequest& request,
                          const ScoreResponse& response) {
  std::string joined;
  for (const auto& t : response.tokens) {
    joined += t.text;
  }
  if (joined != request.continuation) {
    throw BackendError("protocol violation: response tokens reconstruct '" +
                       joined + "' but the continuation is '" +
                       request.continuation + "' (request " +
                       cache_key(request).substr(0, 12) + ")");
  }
}

TableBackend::TableBackend(TableFallback fallback, int uniform_vocab)
    : fallback_(fallback), uniform_vocab_(uniform_vocab) {
  if (fallback_ == TableFallback::uniform && uniform_vocab_ < 1) {
    throw ValidationError("uniform table fallback needs a vocabulary size");
  }
}

void TableBackend::add(std::string context, std::string continuation,
                       ScoreResponse response) {
  entries_[{std::move(context), std::move(continuation)}] = std::move(response);
}

ScoreResponse TableBackend::do_score(const ScoreRequest& request) {
  auto it = entries_.find({request.context, request.continuation});
  if (it != entries_.end()) {
    return it->second;
  }
  if (fallback_ == TableFallback::uniform) {
    ScoreResponse response;
    response.tokens.push_back(
        {request.continuation,
         -std::log(static_cast<double>(uniform_vocab_))});
    return response;
  }
  throw BackendError("table backend has no entry for request " +
                     cache_key(request).substr(0, 12));
}

namespace {

ScoreResponse tokens_from_json(const json& tokens, const std::string& where) {
  if (!tokens.is_array() || tokens.empty()) {
    throw ValidationError(where + ": 'tokens' must be a non-empty array");
  }
  ScoreResponse response;
  for (const auto& t : tokens) {
    if (!t.is_object() || !t.contains("text") || !t.contains("logprob") ||
        !t["text"].is_string() || !t["logprob"].is_number()) {
      throw ValidationError(where +
                            ": token entries need string 'text' and numeric "
                            "'logprob'");
    }
    response.tokens.push_back(
        {t["text"].get<std::string>(), t["logprob"].get<double>()});
  }
  return response;
}

json tokens_to_json(const ScoreResponse& response) {
  json tokens = json::array();
  for (const auto& t : response.tokens) {
    tokens.push_back({{"text", t.text}, {"logprob", t.logprob}});
  }
  return tokens;
}

}  // namespace

std::unique_ptr<TableBackend> load_table_backend(
    const std::filesystem::path& path, TableFallback fallback,
    int uniform_vocab) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open table file: " + path.string());
  }
  auto backend = std::make_unique<TableBackend>(fallback, uniform_vocab);
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) {
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line);
    json entry;
    try {
      entry = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    if (!entry.is_object() || !entry.contains("context") ||
        !entry.contains("continuation") || !entry.contains("tokens")) {
      throw ValidationError(where +
                            ": expected fields context/continuation/tokens");
    }
    ScoreRequest probe;
    probe.context = entry["context"].get<std::string>();
    probe.continuation = entry["continuation"].get<std::string>();
    ScoreResponse response = tokens_from_json(entry["tokens"], where);
    check_reconstruction(probe, response);
    backend->add(probe.context, probe.continuation, std::move(response));
  }
  return backend;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string cache_key(const ScoreRequest& request) {
  // Length-prefixed concatenation keeps field boundaries unambiguous.
  std::string canonical;
  for (const std::string* field :
       {&request.model, &request.template_id, &request.context,
        &request.continuation}) {
    canonical += std::to_string(field->size());
    canonical += ':';
    canonical += *field;
  }
  return sha256_hex(canonical);
}

ResponseCache::ResponseCache(std::filesystem::path file)
    : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) {
    return;  // cold cache; the file appears on first put()
  }
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) {
      continue;
    }
    const std::string where = file_.string() + ":" + std::to_string(line);
    json entry;
    try {
      entry = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": invalid cache entry: " + e.what());
    }
    if (!entry.contains("key") || !entry.contains("response")) {
      throw ValidationError(where + ": cache entry needs key/response");
    }
    entries_[entry["key"].get<std::string>()] =
        tokens_from_json(entry["response"]["tokens"], where);
  }
}

std::optional<ScoreResponse> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void ResponseCache::put(const std::string& key, const ScoreResponse& response) {
  std::unique_lock lock(mutex_);
  if (!entries_.emplace(key, response).second) {
    return;  // already present; entries are immutable
  }
  if (file_.empty()) {
    return;
  }
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) {
    throw BackendError("cannot append to cache file: " + file_.string());
  }
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  json entry;
  entry["key"] = key;
  entry["response"] = {{"tokens", tokens_to_json(response)}};
  entry["created_at"] = stamp;
  out << entry.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string ResponseCache::state_hash() const {
  std::shared_lock lock(mutex_);
  std::vector<const std::pair<const std::string, ScoreResponse>*> sorted;
  sorted.reserve(entries_.size());
  for (const auto& kv : entries_) {
    sorted.push_back(&kv);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  std::string canonical;
  for (const auto* kv : sorted) {
    canonical += kv->first;
    canonical += '=';
    canonical += json({{"tokens", tokens_to_json(kv->second)}}).dump();
    canonical += '\n';
  }
  return sha256_hex(canonical);
}

ScoreResponse CachingBackend::do_score(const ScoreRequest& request) {
  const std::string key = cache_key(request);
  if (auto hit = cache_.get(key)) {
    return *hit;
  }
  if (inner_ == nullptr) {
    throw BackendError("cache miss in offline mode for request " +
                       key.substr(0, 12) + " (model '" + request.model +
                       "'); run the score stage first");
  }
  ScoreResponse response = inner_->score(request);
  check_reconstruction(request, response);
  cache_.put(key, response);
  return response;
}

}  // namespace distalign
