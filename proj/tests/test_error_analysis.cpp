#include "distalign/error_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "distalign/synthetic.hpp"

using namespace distalign;

namespace {

ChoiceProbabilities probs_of(std::vector<double> p) {
  ChoiceProbabilities out;
  out.question_id = "q";
  out.probabilities = std::move(p);
  return out;
}

StudentDistribution students_of(std::vector<double> fractions) {
  StudentDistribution out;
  out.fractions = std::move(fractions);
  out.n_respondents = 100;
  return out;
}

ErrorAnalysisRecord error_record(std::string id, double alignment,
                                 DistractorRank rank) {
  ErrorAnalysisRecord r;
  r.question_id = std::move(id);
  r.selected = 1;
  r.error = true;
  r.alignment = alignment;
  r.rank = rank;
  return r;
}

ErrorAnalysisRecord correct_record(std::string id) {
  ErrorAnalysisRecord r;
  r.question_id = std::move(id);
  r.selected = 0;
  r.error = false;
  return r;
}

}  // namespace

TEST_SUITE("error_analysis") {

TEST_CASE("select_choice takes the argmax with lowest-index ties") {
  CHECK(select_choice(probs_of({0.1, 0.6, 0.2, 0.1})) == 1);
  CHECK(select_choice(probs_of({0.3, 0.3, 0.2, 0.2})) == 0);
  CHECK(select_choice(probs_of({0.25, 0.25, 0.25, 0.25})) == 0);
  CHECK_THROWS_AS((void)select_choice(probs_of({})), ValidationError);
}

TEST_CASE("selection matches the raw likelihood argmax") {
  LikelihoodVector v;
  v.question_id = "q";
  v.log_likelihoods = {-4.0, -1.5, -2.0, -9.0};
  v.token_counts = {1, 1, 1, 1};
  const auto p = normalize(v);
  CHECK(select_choice(p) == 1);
}

TEST_CASE("error_indicator is 1 exactly on mismatches") {
  CHECK(error_indicator(2, 2) == 0);
  CHECK(error_indicator(1, 2) == 1);
  int sum = 0;
  for (int selected = 0; selected < 4; ++selected) {
    sum += error_indicator(selected, 2);
  }
  CHECK(sum == 3);
}

TEST_CASE("alignment score reproduces the worked example") {
  // Correct option A; distractors B=0.30, C=0.20, D=0.15. Selecting C gives
  // 0.20/0.30 = 2/3 (reported as 0.67).
  const auto s = students_of({0.35, 0.30, 0.20, 0.15});
  CHECK(std::abs(alignment_score(s, 2, 0) - 2.0 / 3.0) < 1e-12);
  CHECK(alignment_score(s, 1, 0) == 1.0);  // modal distractor
  CHECK(alignment_score(s, 3, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("alignment score rejects invalid selections") {
  const auto s = students_of({0.35, 0.30, 0.20, 0.15});
  CHECK_THROWS_AS((void)alignment_score(s, 0, 0), ValidationError);
  const auto no_errors = students_of({1.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS((void)alignment_score(no_errors, 1, 0), ValidationError);
}

TEST_CASE("distractor_rank orders by student popularity") {
  const auto s = students_of({0.35, 0.30, 0.20, 0.15});
  CHECK(distractor_rank(s, 1, 0) == DistractorRank::first);
  CHECK(distractor_rank(s, 2, 0) == DistractorRank::second);
  CHECK(distractor_rank(s, 3, 0) == DistractorRank::third);
}

TEST_CASE("tied fractions rank the lower option index better") {
  // Distractors at indices 1, 2, 3 hold (0.25, 0.25, 0.10): the later 0.25
  // takes second place.
  const auto s = students_of({0.40, 0.25, 0.25, 0.10});
  CHECK(distractor_rank(s, 1, 0) == DistractorRank::first);
  CHECK(distractor_rank(s, 2, 0) == DistractorRank::second);
  CHECK(distractor_rank(s, 3, 0) == DistractorRank::third);
}

TEST_CASE("distractor_rank requires four options and a wrong selection") {
  const auto s3 = students_of({0.5, 0.3, 0.2});
  CHECK_THROWS_AS((void)distractor_rank(s3, 1, 0), ValidationError);
  const auto s = students_of({0.35, 0.30, 0.20, 0.15});
  CHECK_THROWS_AS((void)distractor_rank(s, 0, 0), ValidationError);
}

TEST_CASE("analyze_choice assembles records with fields iff error") {
  McqQuestion q;
  q.id = "q";
  q.options = {"a", "b", "c", "d"};
  q.correct_index = 0;
  const auto s = students_of({0.35, 0.30, 0.20, 0.15});

  const auto correct = analyze_choice(q, s, probs_of({0.7, 0.1, 0.1, 0.1}));
  CHECK_FALSE(correct.error);
  CHECK_FALSE(correct.alignment.has_value());
  CHECK_FALSE(correct.rank.has_value());

  const auto wrong = analyze_choice(q, s, probs_of({0.1, 0.1, 0.7, 0.1}));
  CHECK(wrong.error);
  CHECK(wrong.selected == 2);
  REQUIRE(wrong.alignment.has_value());
  CHECK(*wrong.alignment == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(*wrong.rank == DistractorRank::second);
}

TEST_CASE("summarize_errors averages alignments over error records") {
  std::vector<ErrorAnalysisRecord> records = {
      error_record("a", 1.0, DistractorRank::first),
      error_record("b", 0.5, DistractorRank::second),
      correct_record("c"),
  };
  const auto summary = summarize_errors("m", Approach::index, records);
  CHECK(summary.n_questions == 3);
  CHECK(summary.n_incorrect == 2);
  REQUIRE(summary.mean_alignment.has_value());
  CHECK(*summary.mean_alignment == doctest::Approx(0.75).epsilon(1e-12));
  REQUIRE(summary.rank_rates.has_value());
  CHECK((*summary.rank_rates)[0] == doctest::Approx(0.5));
  CHECK((*summary.rank_rates)[1] == doctest::Approx(0.5));
  CHECK((*summary.rank_rates)[2] == 0.0);
}

TEST_CASE("zero-error runs produce an explicit empty summary") {
  const std::vector<ErrorAnalysisRecord> records = {correct_record("a"),
                                                    correct_record("b")};
  const auto summary = summarize_errors("m", Approach::text, records);
  CHECK(summary.n_incorrect == 0);
  CHECK_FALSE(summary.rank_rates.has_value());
  CHECK_FALSE(summary.mean_alignment.has_value());
}

TEST_CASE("rank rates sum to one and the fold matches a brute-force oracle") {
  std::mt19937_64 rng(777);
  std::vector<ErrorAnalysisRecord> records;
  for (int i = 0; i < 200; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "q%03d", i);
    if (rng() % 3 == 0) {
      records.push_back(correct_record(id));
    } else {
      const double alignment =
          0.05 + 0.95 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const auto rank = static_cast<DistractorRank>(rng() % 3);
      records.push_back(error_record(id, alignment, rank));
    }
  }
  const auto summary = summarize_errors("m", Approach::index, records);

  // Oracle: direct fold of sum(alpha_i * e_i) / sum(e_i).
  double alpha_sum = 0.0;
  int errors = 0;
  int rank_counts[3] = {0, 0, 0};
  for (const auto& r : records) {
    if (r.error) {
      ++errors;
      alpha_sum += *r.alignment;
      ++rank_counts[static_cast<int>(*r.rank)];
    }
  }
  REQUIRE(errors > 0);
  CHECK(summary.n_incorrect == errors);
  CHECK(*summary.mean_alignment ==
        doctest::Approx(alpha_sum / errors).epsilon(1e-12));
  double rate_sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    CHECK((*summary.rank_rates)[k] ==
          doctest::Approx(static_cast<double>(rank_counts[k]) / errors));
    rate_sum += (*summary.rank_rates)[k];
  }
  CHECK(rate_sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("the summary fold is independent of record order") {
  std::mt19937_64 rng(4321);
  std::vector<ErrorAnalysisRecord> records;
  for (int i = 0; i < 64; ++i) {
    const double alignment =
        0.1 + 0.9 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    records.push_back(error_record("q" + std::to_string(i), alignment,
                                   static_cast<DistractorRank>(rng() % 3)));
  }
  auto shuffled = records;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = summarize_errors("m", Approach::index, records);
  const auto b = summarize_errors("m", Approach::index, shuffled);
  CHECK(*a.mean_alignment == *b.mean_alignment);  // bitwise equal
  CHECK(*a.rank_rates == *b.rank_rates);
}

TEST_CASE("anti_aligned profile errors always land on the least popular "
          "distractor") {
  const auto fixture =
      generate_synthetic(97, 20, SyntheticProfile::anti_aligned);
  int errors = 0;
  for (std::size_t i = 0; i < fixture.records.size(); ++i) {
    const auto& record = fixture.records[i];
    ChoiceProbabilities p;
    p.question_id = record.question.id;
    p.probabilities = fixture.model_targets[i];
    const auto analysis = analyze_choice(record.question, record.responses, p);
    if (!analysis.error) {
      continue;
    }
    ++errors;
    CHECK(*analysis.rank == DistractorRank::third);
    double min_frac = 1.0;
    double max_frac = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j == record.question.correct_index) {
        continue;
      }
      min_frac = std::min(min_frac, record.responses.fractions[j]);
      max_frac = std::max(max_frac, record.responses.fractions[j]);
    }
    CHECK(*analysis.alignment ==
          doctest::Approx(min_frac / max_frac).epsilon(1e-12));
  }
  CHECK(errors == 10);  // the hard half of 20 questions
}

}  // TEST_SUITE
