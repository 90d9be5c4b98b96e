#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "distalign/backend.hpp"
#include "distalign/dataset.hpp"

namespace distalign {

// Alignment profile of a generated fixture:
//   perfectly_aligned - normalized model probabilities equal the student
//     fractions on every question;
//   anti_aligned - model distractor probabilities are the student distractor
//     fractions in reversed rank order;
//   uniform_students - all student distractor fractions equal, so every
//     per-question distractor correlation is degenerate.
enum class SyntheticProfile { perfectly_aligned, anti_aligned, uniform_students };

const char* to_string(SyntheticProfile p);
SyntheticProfile parse_profile(std::string_view s);

struct TableEntry {
  std::string context;
  std::string continuation;
  ScoreResponse response;
};

struct SyntheticFixture {
  std::vector<DatasetRecord> records;
  // Score-table entries covering both prompt approaches for every question.
  std::vector<TableEntry> table;
  // Target model probability vector per question (test introspection).
  std::vector<std::vector<double>> model_targets;
};

// Deterministic in `seed`: identical arguments reproduce byte-identical
// fixture files on any platform. Throws ValidationError for n < 1.
SyntheticFixture generate_synthetic(std::uint64_t seed, int n_questions,
                                    SyntheticProfile profile);

void write_table_file(std::span<const TableEntry> entries,
                      const std::filesystem::path& path);

// Writes dataset.jsonl, table.jsonl and a ready-to-run config.json into
// out_dir. Returns the config path.
std::filesystem::path write_synthetic_fixture(const SyntheticFixture& fixture,
                                              const std::filesystem::path& out_dir,
                                              std::uint64_t seed,
                                              SyntheticProfile profile);

}  // namespace distalign
