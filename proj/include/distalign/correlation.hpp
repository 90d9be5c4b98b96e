#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distalign/dataset.hpp"
#include "distalign/scoring.hpp"

namespace distalign {

enum class CorrelationMethod { pearson, spearman, kendall };
enum class Aggregation { mean_per_question, pooled };

const char* to_string(CorrelationMethod m);
const char* to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);

// Average-rank convention: tied values share the mean of the rank positions
// they occupy, so the rank sum is always n(n+1)/2.
std::vector<double> average_ranks(std::span<const double> values);

// All three return nullopt for degenerate inputs instead of a value:
// zero variance in either vector (pearson), fully tied ranks (spearman),
// or no comparable pair (kendall). Length mismatch or n < 2 throws.
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);
// Average ranks under ties; equals the 1 - 6*sum(d^2)/(n(n^2-1)) form on
// tie-free input.
std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y);
// tau-a: 2(nc - nd)/(n(n-1)); ties count as neither concordant nor
// discordant.
std::optional<double> kendall(std::span<const double> x,
                              std::span<const double> y);

std::optional<double> correlate(CorrelationMethod method,
                                std::span<const double> x,
                                std::span<const double> y);

struct CorrelationResult {
  std::string question_id;
  CorrelationMethod method = CorrelationMethod::pearson;
  std::optional<double> value;  // nullopt: degenerate
  int n_points = 0;

  bool degenerate() const { return !value.has_value(); }
};

// Correlates the m-1 distractor entries only; index `correct_index` is
// removed from both vectors before the method runs.
CorrelationResult question_correlation(const ChoiceProbabilities& p,
                                       const StudentDistribution& s,
                                       int correct_index,
                                       CorrelationMethod method);

// One question's distractor vectors plus its three correlation results;
// the raw vectors feed pooled aggregation.
struct QuestionCorrelations {
  std::string question_id;
  std::vector<double> model_distractors;
  std::vector<double> student_distractors;
  CorrelationResult pearson;
  CorrelationResult spearman;
  CorrelationResult kendall;
};

QuestionCorrelations correlate_question(const ChoiceProbabilities& p,
                                        const StudentDistribution& s,
                                        int correct_index);

// Aggregated RQ1 row for one (model, approach, aggregation). Method values
// are absent when every question was degenerate under that method.
// n_degenerate counts questions with a constant distractor vector on either
// side (the zero-variance criterion; identical for all methods at m = 4).
struct Rq1Summary {
  std::string model;
  Approach approach = Approach::index;
  Aggregation aggregation = Aggregation::mean_per_question;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> kendall;
  int n_questions = 0;
  int n_degenerate = 0;
};

// mean_per_question: arithmetic mean over non-degenerate per-question
// values. pooled: one correlation over the concatenation of every
// question's distractor pairs. Results are re-sorted by question id so the
// outcome is independent of input order.
Rq1Summary aggregate_correlations(const std::string& model, Approach approach,
                                  std::vector<QuestionCorrelations> results,
                                  Aggregation mode);

}  // namespace distalign
