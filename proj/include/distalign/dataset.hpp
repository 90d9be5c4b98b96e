#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distalign/errors.hpp"

namespace distalign {

// A multiple-choice question with ordered options and one correct option.
struct McqQuestion {
  std::string id;
  std::string subject;
  std::string stem;
  std::vector<std::string> options;
  int correct_index = 0;

  int option_count() const { return static_cast<int>(options.size()); }
};

// Per-option selection fractions aggregated over n_respondents students.
// Fractions are index-aligned with the paired question's options and sum
// to 1: parsing rejects sums further than 1e-6 from 1 and renormalizes the
// rest, leaving the stored sum within a few ulp of 1.
struct StudentDistribution {
  std::vector<double> fractions;
  int n_respondents = 0;
};

struct DatasetRecord {
  McqQuestion question;
  StudentDistribution responses;
};

// Retention rules: at least min_respondents students, error rate strictly
// above min_error_rate, exactly required_option_count options.
struct FilterCriteria {
  int min_respondents = 50;
  double min_error_rate = 0.05;
  int required_option_count = 4;
};

struct SubjectStats {
  int n_questions = 0;
  double mean_correctness = 0.0;
};

// Aggregate view of a dataset. Correctness figures are question-weighted
// (each question counts once regardless of respondent count); report
// metadata records this choice.
struct DatasetSummary {
  int n_questions = 0;
  std::map<std::string, SubjectStats> per_subject;
  double overall_correctness = 0.0;
};

struct Diagnostic {
  int line = 0;
  std::string field;
  std::string reason;
};

// Tolerance for the fractions sum-to-one invariant.
inline constexpr double kFractionSumTolerance = 1e-6;

// Fraction of students who picked anything but the correct option.
double error_rate(const DatasetRecord& record);

// Parses line-delimited JSON records. Throws DatasetError naming the line
// and field on the first malformed record. Record order follows the stream.
std::vector<DatasetRecord> parse_dataset(std::istream& in);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

// Like parse_dataset but collects every problem instead of stopping at the
// first; an empty result means the stream is clean.
std::vector<Diagnostic> validate_dataset(std::istream& in);

// Total function: keeps records satisfying the criteria, preserving order.
std::vector<DatasetRecord> filter_dataset(std::vector<DatasetRecord> items,
                                          const FilterCriteria& criteria);

// Throws ValidationError on empty input.
DatasetSummary summarize_dataset(std::span<const DatasetRecord> items);

// Serializes records back to the line-delimited JSON schema.
void write_dataset(std::span<const DatasetRecord> records, std::ostream& out);
void write_dataset(std::span<const DatasetRecord> records,
                   const std::filesystem::path& path);

}  // namespace distalign
