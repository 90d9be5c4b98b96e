#include "distalign/config.hpp"

#include <fstream>
#include <set>

namespace distalign {

using nlohmann::json;

namespace {

const char* to_string(TableFallback f) {
  return f == TableFallback::error ? "error" : "uniform";
}

TableFallback parse_fallback(const std::string& s) {
  if (s == "error") {
    return TableFallback::error;
  }
  if (s == "uniform") {
    return TableFallback::uniform;
  }
  throw ValidationError("unknown table fallback '" + s + "'");
}

}  // namespace

json RunConfig::to_json() const {
  json models_json = json::array();
  for (const auto& m : models) {
    models_json.push_back({{"name", m.name},
                           {"family", m.family},
                           {"parameter_count", m.parameter_count},
                           {"variant", distalign::to_string(m.variant)},
                           {"endpoint", m.endpoint}});
  }
  json approaches_json = json::array();
  for (auto a : approaches) {
    approaches_json.push_back(distalign::to_string(a));
  }
  json aggregations_json = json::array();
  for (auto a : aggregations) {
    aggregations_json.push_back(distalign::to_string(a));
  }
  return json{
      {"dataset", dataset_path},
      {"filter",
       {{"min_respondents", filter.min_respondents},
        {"min_error_rate", filter.min_error_rate},
        {"required_option_count", filter.required_option_count}}},
      {"models", std::move(models_json)},
      {"backend",
       {{"endpoint", backend.endpoint},
        {"auth_env", backend.auth_env},
        {"concurrency", backend.concurrency},
        {"retries", backend.retries},
        {"table_path", backend.table_path},
        {"table_fallback", to_string(backend.table_fallback)},
        {"table_vocab", backend.table_vocab}}},
      {"templates",
       {{"index", index_template_id}, {"text", text_template_id}}},
      {"approaches", std::move(approaches_json)},
      {"aggregations", std::move(aggregations_json)},
      {"cache_path", cache_path},
      {"out_dir", out_dir},
      {"seed", seed},
      {"offline", offline}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig config;
  if (!j.is_object()) {
    throw ValidationError("config must be a JSON object");
  }
  if (!j.contains("dataset") || !j["dataset"].is_string()) {
    throw ValidationError("config needs a string 'dataset' path");
  }
  config.dataset_path = j["dataset"].get<std::string>();

  if (j.contains("filter")) {
    const json& f = j["filter"];
    config.filter.min_respondents =
        f.value("min_respondents", config.filter.min_respondents);
    config.filter.min_error_rate =
        f.value("min_error_rate", config.filter.min_error_rate);
    config.filter.required_option_count =
        f.value("required_option_count", config.filter.required_option_count);
  }

  if (!j.contains("models") || !j["models"].is_array() ||
      j["models"].empty()) {
    throw ValidationError("config needs a non-empty 'models' array");
  }
  for (const auto& m : j["models"]) {
    ModelSpec spec;
    spec.name = m.value("name", std::string());
    spec.family = m.value("family", std::string());
    spec.parameter_count = m.value("parameter_count", 0.0);
    spec.variant = parse_variant(m.value("variant", std::string("base")));
    spec.endpoint = m.value("endpoint", std::string());
    config.models.push_back(std::move(spec));
  }

  if (j.contains("backend")) {
    const json& b = j["backend"];
    config.backend.endpoint = b.value("endpoint", std::string());
    config.backend.auth_env = b.value("auth_env", std::string());
    config.backend.concurrency = b.value("concurrency", 4);
    config.backend.retries = b.value("retries", 3);
    config.backend.table_path = b.value("table_path", std::string());
    config.backend.table_fallback =
        parse_fallback(b.value("table_fallback", std::string("error")));
    config.backend.table_vocab = b.value("table_vocab", 0);
  }

  if (j.contains("templates")) {
    config.index_template_id =
        j["templates"].value("index", config.index_template_id);
    config.text_template_id =
        j["templates"].value("text", config.text_template_id);
  }

  if (j.contains("approaches")) {
    config.approaches.clear();
    for (const auto& a : j["approaches"]) {
      config.approaches.push_back(parse_approach(a.get<std::string>()));
    }
  }
  if (j.contains("aggregations")) {
    config.aggregations.clear();
    for (const auto& a : j["aggregations"]) {
      config.aggregations.push_back(parse_aggregation(a.get<std::string>()));
    }
  }

  config.cache_path = j.value("cache_path", config.cache_path);
  config.out_dir = j.value("out_dir", config.out_dir);
  config.seed = j.value("seed", config.seed);
  config.offline = j.value("offline", false);
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config file: " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path.string());
  }
  out << to_json().dump(2) << '\n';
}

void RunConfig::check_coherence() const {
  if (models.empty()) {
    throw ValidationError("config declares no models");
  }
  std::set<std::string> names;
  for (const auto& m : models) {
    if (m.name.empty()) {
      throw ValidationError("every model needs a name");
    }
    if (!names.insert(m.name).second) {
      throw ValidationError("duplicate model name '" + m.name + "'");
    }
    if (m.parameter_count <= 0.0) {
      throw ValidationError("model '" + m.name +
                            "' needs a positive parameter_count");
    }
    if (!m.is_table() && m.endpoint.empty() && backend.endpoint.empty()) {
      throw ValidationError("model '" + m.name +
                            "' has no endpoint and no backend default");
    }
    if (m.is_table() && backend.table_path.empty()) {
      throw ValidationError("model '" + m.name +
                            "' is table-backed but backend.table_path is "
                            "empty");
    }
  }
  if (backend.concurrency < 1) {
    throw ValidationError("backend.concurrency must be at least 1");
  }
  if (backend.retries < 1) {
    throw ValidationError("backend.retries must be at least 1");
  }
  if (approaches.empty()) {
    throw ValidationError("config enables no approaches");
  }
  if (aggregations.empty()) {
    throw ValidationError("config enables no aggregations");
  }
  if (dataset_path.empty()) {
    throw ValidationError("config needs a dataset path");
  }
}

}  // namespace distalign
