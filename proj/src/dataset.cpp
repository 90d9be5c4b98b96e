#include "distalign/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace distalign {

namespace {

using nlohmann::json;

// Strict-inequality guard: error rates within this distance of the
// threshold count as not exceeding it, so a rate that is exactly the
// threshold up to float rounding is still excluded.
constexpr double kErrorRateGuard = 1e-12;

std::string trim_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

const json& require_field(const json& record, const std::string& field,
                          int line) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw DatasetError(line, field, "missing field");
  }
  return *it;
}

std::string require_string(const json& record, const std::string& field,
                           int line) {
  const json& v = require_field(record, field, line);
  if (!v.is_string()) {
    throw DatasetError(line, field, "expected a string");
  }
  return v.get<std::string>();
}

int require_int(const json& record, const std::string& field, int line) {
  const json& v = require_field(record, field, line);
  if (!v.is_number_integer()) {
    throw DatasetError(line, field, "expected an integer");
  }
  return v.get<int>();
}

DatasetRecord parse_record(const std::string& text, int line) {
  json record;
  try {
    record = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetError(line, "", std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) {
    throw DatasetError(line, "", "record is not a JSON object");
  }

  DatasetRecord out;
  out.question.id = require_string(record, "id", line);
  if (out.question.id.empty()) {
    throw DatasetError(line, "id", "must be non-empty");
  }
  out.question.subject = require_string(record, "subject", line);
  out.question.stem = require_string(record, "stem", line);

  const json& options = require_field(record, "options", line);
  if (!options.is_array() || options.empty()) {
    throw DatasetError(line, "options", "expected a non-empty array");
  }
  for (const auto& opt : options) {
    if (!opt.is_string() || opt.get<std::string>().empty()) {
      throw DatasetError(line, "options",
                         "every option must be a non-empty string");
    }
    out.question.options.push_back(opt.get<std::string>());
  }
  const int m = out.question.option_count();

  out.question.correct_index = require_int(record, "correct_index", line);
  if (out.question.correct_index < 0 || out.question.correct_index >= m) {
    throw DatasetError(line, "correct_index",
                       "must be in [0, " + std::to_string(m) + ")");
  }

  const json& responses = require_field(record, "responses", line);
  if (!responses.is_array()) {
    throw DatasetError(line, "responses", "expected an array");
  }
  if (static_cast<int>(responses.size()) != m) {
    throw DatasetError(line, "responses",
                       "length " + std::to_string(responses.size()) +
                           " does not match option count " +
                           std::to_string(m));
  }
  double sum = 0.0;
  for (const auto& f : responses) {
    if (!f.is_number()) {
      throw DatasetError(line, "responses", "expected numeric fractions");
    }
    const double value = f.get<double>();
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
      throw DatasetError(line, "responses",
                         "fraction " + trim_number(value) +
                             " outside [0, 1]");
    }
    out.responses.fractions.push_back(value);
    sum += value;
  }
  if (std::abs(sum - 1.0) > kFractionSumTolerance) {
    throw DatasetError(line, "responses",
                       "fractions sum " + trim_number(sum) + " != 1.0");
  }
  // Inside tolerance: renormalize for downstream stability.
  if (sum != 1.0) {
    for (double& f : out.responses.fractions) {
      f /= sum;
    }
  }

  out.responses.n_respondents = require_int(record, "n_respondents", line);
  if (out.responses.n_respondents < 1) {
    throw DatasetError(line, "n_respondents", "must be positive");
  }
  return out;
}

}  // namespace

double error_rate(const DatasetRecord& record) {
  return 1.0 - record.responses.fractions[record.question.correct_index];
}

std::vector<DatasetRecord> parse_dataset(std::istream& in) {
  std::vector<DatasetRecord> records;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) {
      continue;
    }
    records.push_back(parse_record(text, line));
  }
  return records;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset file: " + path.string());
  }
  return parse_dataset(in);
}

std::vector<Diagnostic> validate_dataset(std::istream& in) {
  std::vector<Diagnostic> diagnostics;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) {
      continue;
    }
    try {
      parse_record(text, line);
    } catch (const DatasetError& e) {
      diagnostics.push_back({e.line(), e.field(), e.what()});
    }
  }
  return diagnostics;
}

std::vector<DatasetRecord> filter_dataset(std::vector<DatasetRecord> items,
                                          const FilterCriteria& criteria) {
  std::erase_if(items, [&](const DatasetRecord& r) {
    if (r.responses.n_respondents < criteria.min_respondents) {
      return true;
    }
    if (r.question.option_count() != criteria.required_option_count) {
      return true;
    }
    return error_rate(r) <= criteria.min_error_rate + kErrorRateGuard;
  });
  return items;
}

DatasetSummary summarize_dataset(std::span<const DatasetRecord> items) {
  if (items.empty()) {
    throw ValidationError("summarize_dataset: empty dataset");
  }
  DatasetSummary summary;
  summary.n_questions = static_cast<int>(items.size());

  std::map<std::string, std::pair<int, double>> acc;  // subject -> (n, sum)
  double total = 0.0;
  for (const auto& r : items) {
    const double correct = r.responses.fractions[r.question.correct_index];
    total += correct;
    auto& [count, sum] = acc[r.question.subject];
    ++count;
    sum += correct;
  }
  summary.overall_correctness = total / static_cast<double>(items.size());
  for (const auto& [subject, pair] : acc) {
    summary.per_subject[subject] = {pair.first,
                                    pair.second / static_cast<double>(pair.first)};
  }
  return summary;
}

void write_dataset(std::span<const DatasetRecord> records, std::ostream& out) {
  for (const auto& r : records) {
    json record;
    record["id"] = r.question.id;
    record["subject"] = r.question.subject;
    record["stem"] = r.question.stem;
    record["options"] = r.question.options;
    record["correct_index"] = r.question.correct_index;
    record["responses"] = r.responses.fractions;
    record["n_respondents"] = r.responses.n_respondents;
    out << record.dump() << '\n';
  }
}

void write_dataset(std::span<const DatasetRecord> records,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path.string());
  }
  write_dataset(records, out);
}

}  // namespace distalign
