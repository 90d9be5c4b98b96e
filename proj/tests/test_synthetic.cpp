#include "distalign/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "distalign/correlation.hpp"
#include "distalign/scoring.hpp"

using namespace distalign;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   (std::string("distalign_synth_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Normalized model probabilities for question i straight from the fixture's
// own targets (softmax of ln(target) reproduces the target up to rounding).
ChoiceProbabilities target_probs(const SyntheticFixture& fixture,
                                 std::size_t i) {
  ChoiceProbabilities p;
  p.question_id = fixture.records[i].question.id;
  p.probabilities = fixture.model_targets[i];
  return p;
}

}  // namespace

TEST_SUITE("synthetic") {

TEST_CASE("same seed reproduces byte-identical fixture files") {
  const auto dir_a = temp_dir("det_a");
  const auto dir_b = temp_dir("det_b");
  const auto fix_a = generate_synthetic(7, 12, SyntheticProfile::anti_aligned);
  const auto fix_b = generate_synthetic(7, 12, SyntheticProfile::anti_aligned);
  write_synthetic_fixture(fix_a, dir_a, 7, SyntheticProfile::anti_aligned);
  write_synthetic_fixture(fix_b, dir_b, 7, SyntheticProfile::anti_aligned);
  CHECK(slurp(dir_a / "dataset.jsonl") == slurp(dir_b / "dataset.jsonl"));
  CHECK(slurp(dir_a / "table.jsonl") == slurp(dir_b / "table.jsonl"));
  CHECK(slurp(dir_a / "config.json") == slurp(dir_b / "config.json"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("different seeds differ") {
  const auto a = generate_synthetic(1, 5, SyntheticProfile::perfectly_aligned);
  const auto b = generate_synthetic(2, 5, SyntheticProfile::perfectly_aligned);
  CHECK(a.records[0].question.stem != b.records[0].question.stem);
}

TEST_CASE("profiles parse and unknown names are rejected") {
  CHECK(parse_profile("perfectly_aligned") ==
        SyntheticProfile::perfectly_aligned);
  CHECK(parse_profile("anti_aligned") == SyntheticProfile::anti_aligned);
  CHECK(parse_profile("uniform_students") ==
        SyntheticProfile::uniform_students);
  CHECK_THROWS_AS((void)parse_profile("mostly_aligned"), ValidationError);
  CHECK_THROWS_AS(
      (void)generate_synthetic(1, 0, SyntheticProfile::perfectly_aligned),
      ValidationError);
}

TEST_CASE("perfectly_aligned targets equal the student fractions") {
  const auto fixture =
      generate_synthetic(11, 8, SyntheticProfile::perfectly_aligned);
  for (std::size_t i = 0; i < fixture.records.size(); ++i) {
    CHECK(fixture.model_targets[i] == fixture.records[i].responses.fractions);
    const auto r = question_correlation(
        target_probs(fixture, i), fixture.records[i].responses,
        fixture.records[i].question.correct_index, CorrelationMethod::pearson);
    REQUIRE_FALSE(r.degenerate());
    CHECK(*r.value == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("anti_aligned reverses distractor ranks") {
  const auto fixture =
      generate_synthetic(13, 8, SyntheticProfile::anti_aligned);
  for (std::size_t i = 0; i < fixture.records.size(); ++i) {
    const auto& record = fixture.records[i];
    for (auto method :
         {CorrelationMethod::spearman, CorrelationMethod::kendall}) {
      const auto r =
          question_correlation(target_probs(fixture, i), record.responses,
                               record.question.correct_index, method);
      REQUIRE_FALSE(r.degenerate());
      CHECK(*r.value == doctest::Approx(-1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("uniform_students distractor fractions are bit-identical") {
  const auto fixture =
      generate_synthetic(17, 8, SyntheticProfile::uniform_students);
  for (const auto& record : fixture.records) {
    std::vector<double> distractors;
    for (int j = 0; j < 4; ++j) {
      if (j != record.question.correct_index) {
        distractors.push_back(record.responses.fractions[j]);
      }
    }
    CHECK(distractors[0] == distractors[1]);
    CHECK(distractors[1] == distractors[2]);
    // Dyadic construction: the index-order sum is exactly 1.
    double sum = 0.0;
    for (double f : record.responses.fractions) {
      sum += f;
    }
    CHECK(sum == 1.0);
  }
}

TEST_CASE("generated dataset round-trips through parsing and filtering") {
  for (auto profile :
       {SyntheticProfile::perfectly_aligned, SyntheticProfile::anti_aligned,
        SyntheticProfile::uniform_students}) {
    const auto fixture = generate_synthetic(23, 10, profile);
    std::ostringstream out;
    write_dataset(fixture.records, out);
    std::istringstream in(out.str());
    const auto parsed = parse_dataset(in);
    REQUIRE(parsed.size() == 10);
    // Every synthetic question satisfies the default criteria.
    CHECK(filter_dataset(parsed, FilterCriteria{}).size() == 10);
  }
}

TEST_CASE("table answers every continuation of its own questions") {
  const auto dir = temp_dir("table_roundtrip");
  const auto fixture =
      generate_synthetic(29, 6, SyntheticProfile::perfectly_aligned);
  write_table_file(fixture.table, dir / "table.jsonl");
  const auto backend = load_table_backend(dir / "table.jsonl");

  for (std::size_t i = 0; i < fixture.records.size(); ++i) {
    const auto& q = fixture.records[i].question;
    for (auto approach : {Approach::index, Approach::text}) {
      const auto lv = option_loglikelihoods(*backend, "any-model", q, approach);
      const auto probs = normalize(lv);
      for (int j = 0; j < 4; ++j) {
        CHECK(probs.probabilities[j] ==
              doctest::Approx(fixture.model_targets[i][j]).epsilon(1e-12));
      }
    }
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
