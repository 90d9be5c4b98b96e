#include "distalign/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "distalign/config.hpp"
#include "distalign/scoring.hpp"

namespace distalign {

using nlohmann::json;

const char* to_string(SyntheticProfile p) {
  switch (p) {
    case SyntheticProfile::perfectly_aligned:
      return "perfectly_aligned";
    case SyntheticProfile::anti_aligned:
      return "anti_aligned";
    case SyntheticProfile::uniform_students:
      return "uniform_students";
  }
  return "?";
}

SyntheticProfile parse_profile(std::string_view s) {
  if (s == "perfectly_aligned") {
    return SyntheticProfile::perfectly_aligned;
  }
  if (s == "anti_aligned") {
    return SyntheticProfile::anti_aligned;
  }
  if (s == "uniform_students") {
    return SyntheticProfile::uniform_students;
  }
  throw ValidationError("unknown synthetic profile '" + std::string(s) + "'");
}

namespace {

constexpr const char* kSubjects[] = {"mathematics", "biology", "physics"};

constexpr const char* kNouns[] = {
    "gradient",  "catalyst",  "perimeter",   "momentum", "denominator",
    "electron",  "enzyme",    "velocity",    "isotope",  "quotient",
    "membrane",  "tangent",   "equilibrium", "vector",   "polymer"};

constexpr const char* kModifiers[] = {"constant", "inverse",  "relative",
                                      "bounded",  "partial",  "stable",
                                      "discrete", "adjacent", "latent"};

// mt19937_64 is specified bit-for-bit by the standard; deriving doubles
// without std distributions keeps outputs identical across platforms.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  int next_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() %
                                 static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

std::string make_option_text(SeededRng& rng,
                             std::set<std::string>& used_in_question) {
  for (;;) {
    std::string text;
    const int words = rng.next_int(1, 3);
    if (words >= 2) {
      text += kModifiers[rng.next_int(0, std::size(kModifiers) - 1)];
      text += ' ';
    }
    text += kNouns[rng.next_int(0, std::size(kNouns) - 1)];
    if (words == 3) {
      text += ' ';
      text += kNouns[rng.next_int(0, std::size(kNouns) - 1)];
    }
    if (used_in_question.insert(text).second) {
      return text;
    }
  }
}

// Three strictly distinct positive weights summing to whatever; callers
// scale them into the distractor mass. Bases 3/2/1 keep them apart even at
// the extremes of the jitter.
std::array<double, 3> distinct_weights(SeededRng& rng) {
  return {3.0 + 0.5 * rng.next_unit(), 2.0 + 0.4 * rng.next_unit(),
          1.0 + 0.4 * rng.next_unit()};
}

}  // namespace

SyntheticFixture generate_synthetic(std::uint64_t seed, int n_questions,
                                    SyntheticProfile profile) {
  if (n_questions < 1) {
    throw ValidationError("generate_synthetic: need at least one question");
  }
  SeededRng rng(seed);
  SyntheticFixture fixture;
  fixture.records.reserve(n_questions);
  fixture.model_targets.reserve(n_questions);

  for (int i = 0; i < n_questions; ++i) {
    DatasetRecord record;
    McqQuestion& q = record.question;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", i);
    q.id = id;
    q.subject = kSubjects[i % std::size(kSubjects)];
    q.stem = "Which term best matches concept " +
             std::to_string(rng.next_int(1, 99)) + " in " + q.subject +
             " unit " + std::to_string(rng.next_int(1, 12)) + "?";
    std::set<std::string> used;
    for (int j = 0; j < 4; ++j) {
      q.options.push_back(make_option_text(rng, used));
    }
    q.correct_index = rng.next_int(0, 3);

    // Even questions are "easy" (the correct option dominates); odd ones
    // are "hard" (the modal distractor beats it), so aligned profiles make
    // the model err on exactly the hard half.
    const bool hard = (i % 2) == 1;
    const double correct_fraction =
        hard ? rng.next_range(0.10, 0.25) : rng.next_range(0.45, 0.85);
    const double distractor_mass = 1.0 - correct_fraction;

    std::vector<double>& fractions = record.responses.fractions;
    fractions.assign(4, 0.0);
    std::vector<int> distractor_slots;
    for (int j = 0; j < 4; ++j) {
      if (j != q.correct_index) {
        distractor_slots.push_back(j);
      }
    }

    if (profile == SyntheticProfile::uniform_students) {
      // Dyadic share j/256 keeps every fraction and partial sum exactly
      // representable, so parsing never renormalizes and the three
      // distractor fractions stay bit-identical.
      const double share = static_cast<double>(rng.next_int(34, 50)) / 256.0;
      for (int slot : distractor_slots) {
        fractions[slot] = share;
      }
    } else {
      auto weights = distinct_weights(rng);
      const double total = weights[0] + weights[1] + weights[2];
      // Random assignment of the descending weights onto the three slots.
      std::array<int, 3> order = {0, 1, 2};
      for (int k = 2; k > 0; --k) {
        std::swap(order[k], order[rng.next_int(0, k)]);
      }
      for (int k = 0; k < 3; ++k) {
        fractions[distractor_slots[order[k]]] =
            distractor_mass * weights[k] / total;
      }
    }
    // Exact-sum fixup on the correct slot; distractor values stay intact.
    double others = 0.0;
    for (int slot : distractor_slots) {
      others += fractions[slot];
    }
    fractions[q.correct_index] = 1.0 - others;
    record.responses.n_respondents = 50 + static_cast<int>(rng.next_u64() % 451);

    // Target model probabilities.
    std::vector<double> target(4, 0.0);
    switch (profile) {
      case SyntheticProfile::perfectly_aligned:
        target = fractions;
        break;
      case SyntheticProfile::anti_aligned: {
        target[q.correct_index] = fractions[q.correct_index];
        std::vector<int> by_popularity = distractor_slots;
        std::sort(by_popularity.begin(), by_popularity.end(),
                  [&](int a, int b) { return fractions[a] > fractions[b]; });
        // Most popular slot gets the least popular fraction and vice versa.
        for (int k = 0; k < 3; ++k) {
          target[by_popularity[k]] = fractions[by_popularity[2 - k]];
        }
        break;
      }
      case SyntheticProfile::uniform_students: {
        // Students are flat; the model still needs a well-formed, distinct
        // distribution, with the correct option on top.
        const double model_correct = rng.next_range(0.45, 0.85);
        auto weights = distinct_weights(rng);
        const double total = weights[0] + weights[1] + weights[2];
        target[q.correct_index] = model_correct;
        for (int k = 0; k < 3; ++k) {
          target[distractor_slots[k]] =
              (1.0 - model_correct) * weights[k] / total;
        }
        break;
      }
    }

    // Table entries for both approaches: one token per continuation whose
    // log-probability is ln(target), so softmax reproduces the target.
    const PromptBundle index_bundle = render_index_prompt(q);
    const PromptBundle text_bundle = render_text_prompt(q);
    for (int j = 0; j < 4; ++j) {
      const double logprob = std::log(target[j]);
      fixture.table.push_back({index_bundle.context,
                               index_bundle.continuations[j],
                               {{{index_bundle.continuations[j], logprob}}}});
      fixture.table.push_back({text_bundle.context,
                               text_bundle.continuations[j],
                               {{{text_bundle.continuations[j], logprob}}}});
    }

    fixture.records.push_back(std::move(record));
    fixture.model_targets.push_back(std::move(target));
  }
  return fixture;
}

void write_table_file(std::span<const TableEntry> entries,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path.string());
  }
  for (const auto& entry : entries) {
    json tokens = json::array();
    for (const auto& t : entry.response.tokens) {
      tokens.push_back({{"text", t.text}, {"logprob", t.logprob}});
    }
    json line;
    line["context"] = entry.context;
    line["continuation"] = entry.continuation;
    line["tokens"] = std::move(tokens);
    out << line.dump() << '\n';
  }
}

std::filesystem::path write_synthetic_fixture(
    const SyntheticFixture& fixture, const std::filesystem::path& out_dir,
    std::uint64_t seed, SyntheticProfile profile) {
  std::filesystem::create_directories(out_dir);
  write_dataset(fixture.records, out_dir / "dataset.jsonl");
  write_table_file(fixture.table, out_dir / "table.jsonl");

  RunConfig config;
  config.dataset_path = "dataset.jsonl";
  config.backend.table_path = "table.jsonl";
  config.seed = seed;
  config.models = {
      {"synth-0.5b", "synth", 0.5, ModelVariant::base, "table"},
      {"synth-7b", "synth", 7.0, ModelVariant::instruct, "table"},
  };
  (void)profile;
  const auto config_path = out_dir / "config.json";
  config.save(config_path);
  return config_path;
}

}  // namespace distalign
