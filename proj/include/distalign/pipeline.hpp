#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distalign/config.hpp"
#include "distalign/correlation.hpp"
#include "distalign/error_analysis.hpp"

namespace distalign {

struct ScoreStats {
  std::uint64_t requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t backend_calls = 0;
  int n_questions = 0;
};

struct AnalysisResult {
  nlohmann::json rq1;
  nlohmann::json rq2;
  nlohmann::json dataset_summary;
  int n_questions = 0;
};

// Per-question RQ1/RQ2 results for one (model, approach) pass. Questions
// whose backend scores come back non-finite are excluded from both analyses
// and listed instead.
struct ModelApproachAnalysis {
  std::vector<QuestionCorrelations> correlations;
  std::vector<ErrorAnalysisRecord> choices;
  std::vector<std::string> excluded;
};

ModelApproachAnalysis analyze_records(ScoringBackend& backend,
                                      const std::string& model,
                                      Approach approach,
                                      const std::string& template_id,
                                      std::span<const DatasetRecord> records);

// validate: parses config + dataset, streams diagnostics; true iff clean.
bool run_validate(const RunConfig& config, std::ostream& diagnostics);

// score: renders prompts and scores every (model, approach, question,
// option) through the cache, with bounded concurrency for remote backends.
// Idempotent: warm cache means zero backend calls.
ScoreStats run_score(const RunConfig& config);

// analyze: consumes the cache only (never touches the network); computes
// RQ1/RQ2 and writes rq1.json, rq2.json, dataset_summary.json to out_dir.
AnalysisResult run_analyze(const RunConfig& config);

// report: reads rq1.json/rq2.json from out_dir and writes rq1_table.csv,
// rq2_table.csv, size_series.csv plus full-precision JSON mirrors. Throws
// EmptyResultsError when there is nothing to report.
void run_report(const RunConfig& config);

}  // namespace distalign
