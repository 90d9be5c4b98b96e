#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distalign/backend.hpp"
#include "distalign/correlation.hpp"
#include "distalign/dataset.hpp"
#include "distalign/scoring.hpp"

namespace distalign {

struct BackendSettings {
  std::string endpoint;  // default remote endpoint for non-table models
  std::string auth_env;  // env var naming the bearer token
  int concurrency = 4;   // in-flight requests per endpoint
  int retries = 3;       // attempts per request
  std::string table_path;
  TableFallback table_fallback = TableFallback::error;
  int table_vocab = 0;  // declared vocabulary for the uniform fallback
};

// Declarative run description. Paths are kept exactly as written and
// resolve against the process working directory; the effective config is
// embedded verbatim in every output for provenance.
struct RunConfig {
  std::string dataset_path;
  FilterCriteria filter;
  std::vector<ModelSpec> models;
  BackendSettings backend;
  std::string index_template_id = kIndexTemplateId;
  std::string text_template_id = kTextTemplateId;
  std::vector<Approach> approaches = {Approach::index, Approach::text};
  std::vector<Aggregation> aggregations = {Aggregation::mean_per_question,
                                           Aggregation::pooled};
  std::string cache_path = "cache.jsonl";
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool offline = false;

  const std::string& template_for(Approach a) const {
    return a == Approach::index ? index_template_id : text_template_id;
  }

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Structural checks that need no file access: at least one model, unique
  // model names, positive parameter counts, an endpoint for every non-table
  // model, a table path when any model is table-backed, concurrency >= 1.
  // Throws ValidationError on the first violation.
  void check_coherence() const;
};

}  // namespace distalign
