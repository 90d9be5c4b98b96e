#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "distalign/dataset.hpp"
#include "distalign/scoring.hpp"

namespace distalign {

// Position of the model's chosen distractor when the three distractors are
// ordered by student selection frequency, most popular first.
enum class DistractorRank { first = 0, second = 1, third = 2 };

const char* to_string(DistractorRank r);

// Index of the maximum probability; ties resolve to the lowest index.
int select_choice(const ChoiceProbabilities& p);

// 1 iff selected != correct_index.
int error_indicator(int selected, int correct_index);

// selected's student fraction over the modal distractor's fraction.
// Requires selected != correct_index and a positive modal distractor
// fraction (guaranteed post-filter); throws ValidationError otherwise.
double alignment_score(const StudentDistribution& s, int selected,
                       int correct_index);

// Requires m == 4 and selected != correct_index. Tied student fractions
// give the better rank to the lower option index.
DistractorRank distractor_rank(const StudentDistribution& s, int selected,
                               int correct_index);

// Per-question RQ2 outcome; alignment and rank are present iff the model
// erred.
struct ErrorAnalysisRecord {
  std::string question_id;
  int selected = 0;
  bool error = false;
  std::optional<double> alignment;
  std::optional<DistractorRank> rank;
};

ErrorAnalysisRecord analyze_choice(const McqQuestion& q,
                                   const StudentDistribution& s,
                                   const ChoiceProbabilities& p);

// Aggregated RQ2 row. rank_rates and mean_alignment are absent when the
// run had no errors.
struct AlignmentSummary {
  std::string model;
  Approach approach = Approach::index;
  int n_questions = 0;
  int n_incorrect = 0;
  std::optional<std::array<double, 3>> rank_rates;
  std::optional<double> mean_alignment;
};

// Records are re-sorted by question id before accumulation, so the fold is
// independent of input order.
AlignmentSummary summarize_errors(const std::string& model, Approach approach,
                                  std::vector<ErrorAnalysisRecord> records);

}  // namespace distalign
