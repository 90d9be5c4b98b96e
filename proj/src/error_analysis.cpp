#include "distalign/error_analysis.hpp"

#include <algorithm>

namespace distalign {

const char* to_string(DistractorRank r) {
  switch (r) {
    case DistractorRank::first:
      return "first";
    case DistractorRank::second:
      return "second";
    case DistractorRank::third:
      return "third";
  }
  return "?";
}

int select_choice(const ChoiceProbabilities& p) {
  if (p.probabilities.empty()) {
    throw ValidationError("select_choice: empty probability vector");
  }
  int best = 0;
  for (int j = 1; j < static_cast<int>(p.probabilities.size()); ++j) {
    if (p.probabilities[j] > p.probabilities[best]) {
      best = j;
    }
  }
  return best;
}

int error_indicator(int selected, int correct_index) {
  return selected != correct_index ? 1 : 0;
}

double alignment_score(const StudentDistribution& s, int selected,
                       int correct_index) {
  if (selected == correct_index) {
    throw ValidationError("alignment_score: selection is the correct option");
  }
  double max_distractor = 0.0;
  for (int j = 0; j < static_cast<int>(s.fractions.size()); ++j) {
    if (j != correct_index) {
      max_distractor = std::max(max_distractor, s.fractions[j]);
    }
  }
  if (max_distractor <= 0.0) {
    throw ValidationError(
        "alignment_score: no student selected any distractor");
  }
  return s.fractions[selected] / max_distractor;
}

DistractorRank distractor_rank(const StudentDistribution& s, int selected,
                               int correct_index) {
  if (s.fractions.size() != 4) {
    throw ValidationError("distractor_rank: expects exactly 4 options");
  }
  if (selected == correct_index) {
    throw ValidationError("distractor_rank: selection is the correct option");
  }
  std::vector<std::pair<double, int>> distractors;  // (fraction, option index)
  for (int j = 0; j < 4; ++j) {
    if (j != correct_index) {
      distractors.emplace_back(s.fractions[j], j);
    }
  }
  // Most popular first; equal fractions give the better rank to the lower
  // option index.
  std::sort(distractors.begin(), distractors.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) {
                return a.first > b.first;
              }
              return a.second < b.second;
            });
  for (int pos = 0; pos < 3; ++pos) {
    if (distractors[pos].second == selected) {
      return static_cast<DistractorRank>(pos);
    }
  }
  throw ValidationError("distractor_rank: selection out of range");
}

ErrorAnalysisRecord analyze_choice(const McqQuestion& q,
                                   const StudentDistribution& s,
                                   const ChoiceProbabilities& p) {
  ErrorAnalysisRecord record;
  record.question_id = q.id;
  record.selected = select_choice(p);
  record.error = error_indicator(record.selected, q.correct_index) == 1;
  if (record.error) {
    record.alignment = alignment_score(s, record.selected, q.correct_index);
    record.rank = distractor_rank(s, record.selected, q.correct_index);
  }
  return record;
}

AlignmentSummary summarize_errors(const std::string& model, Approach approach,
                                  std::vector<ErrorAnalysisRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ErrorAnalysisRecord& a, const ErrorAnalysisRecord& b) {
              return a.question_id < b.question_id;
            });

  AlignmentSummary summary;
  summary.model = model;
  summary.approach = approach;
  summary.n_questions = static_cast<int>(records.size());

  int rank_counts[3] = {0, 0, 0};
  double alignment_sum = 0.0;
  for (const auto& r : records) {
    if (!r.error) {
      continue;
    }
    ++summary.n_incorrect;
    alignment_sum += r.alignment.value();
    ++rank_counts[static_cast<int>(r.rank.value())];
  }
  if (summary.n_incorrect > 0) {
    const double n = static_cast<double>(summary.n_incorrect);
    summary.rank_rates = {rank_counts[0] / n, rank_counts[1] / n,
                          rank_counts[2] / n};
    summary.mean_alignment = alignment_sum / n;
  }
  return summary;
}

}  // namespace distalign
