#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "distalign/backend.hpp"
#include "distalign/correlation.hpp"
#include "distalign/error_analysis.hpp"

namespace distalign {

// Fixed-point decimal string, e.g. format_fixed(0.7566, 3) == "0.757".
std::string format_fixed(double value, int decimals = 3);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

// One point of the correlation-vs-model-size series.
struct SizeSeriesPoint {
  std::string family;
  ModelVariant variant = ModelVariant::base;
  double parameter_count = 0.0;
  Approach approach = Approach::index;
  double pearson = 0.0;
};

// Rows sorted by (approach, parameter_count, model name); numeric cells at
// 3 decimals, absent values rendered as "NA". Duplicate
// (model, approach, aggregation) keys throw ValidationError, as does a
// summary naming a model missing from `specs`.
Table build_rq1_table(std::span<const Rq1Summary> summaries,
                      const std::map<std::string, ModelSpec>& specs);

// RQ2 counterpart: model, approach, n_incorrect, rank percentages, mean
// alignment. Duplicate (model, approach) keys throw.
Table build_rq2_table(std::span<const AlignmentSummary> summaries,
                      const std::map<std::string, ModelSpec>& specs);

// One series per (family, variant, approach), points ascending by
// parameter count. Consumes mean_per_question summaries with a present
// pearson value.
std::vector<SizeSeriesPoint> build_size_series(
    std::span<const Rq1Summary> summaries,
    const std::map<std::string, ModelSpec>& specs);

Table size_series_table(std::span<const SizeSeriesPoint> points);

}  // namespace distalign
