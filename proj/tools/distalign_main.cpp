// distalign: measure how a language model's answer-choice likelihoods and
// wrong-answer selections line up with real student response distributions
// on multiple-choice questions.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distalign/config.hpp"
#include "distalign/pipeline.hpp"
#include "distalign/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitBackend = 2;
constexpr int kExitEmpty = 3;

struct CommonFlags {
  std::string config_path;
  std::string models;       // comma-separated subset
  std::string approach;     // index | text | both
  std::string aggregation;  // mean | pooled | both
  std::string out_dir;
  std::int64_t seed = -1;
  bool offline = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Run config JSON path")
      ->required();
  cmd->add_option("--models", flags.models,
                  "Comma-separated subset of configured model names");
  cmd->add_option("--approach", flags.approach,
                  "Limit to one approach: index, text, or both")
      ->check(CLI::IsMember({"index", "text", "both"}));
  cmd->add_option("--aggregation", flags.aggregation,
                  "Limit to one aggregation: mean, pooled, or both")
      ->check(CLI::IsMember({"mean", "pooled", "both"}));
  cmd->add_option("--out", flags.out_dir, "Output directory override");
  cmd->add_option("--seed", flags.seed, "Seed override");
  cmd->add_flag("--offline", flags.offline,
                "Forbid network access; remote scores must already be "
                "cached");
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::size_t end = comma == std::string::npos ? csv.size() : comma;
    if (end > start) {
      parts.push_back(csv.substr(start, end - start));
    }
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return parts;
}

distalign::RunConfig effective_config(const CommonFlags& flags) {
  auto config = distalign::RunConfig::load(flags.config_path);
  if (!flags.models.empty()) {
    const auto keep = split_csv(flags.models);
    std::vector<distalign::ModelSpec> selected;
    for (const auto& name : keep) {
      bool found = false;
      for (const auto& m : config.models) {
        if (m.name == name) {
          selected.push_back(m);
          found = true;
          break;
        }
      }
      if (!found) {
        throw distalign::ValidationError("--models names unknown model '" +
                                         name + "'");
      }
    }
    config.models = std::move(selected);
  }
  if (flags.approach == "index") {
    config.approaches = {distalign::Approach::index};
  } else if (flags.approach == "text") {
    config.approaches = {distalign::Approach::text};
  } else if (flags.approach == "both") {
    config.approaches = {distalign::Approach::index,
                         distalign::Approach::text};
  }
  if (flags.aggregation == "mean") {
    config.aggregations = {distalign::Aggregation::mean_per_question};
  } else if (flags.aggregation == "pooled") {
    config.aggregations = {distalign::Aggregation::pooled};
  } else if (flags.aggregation == "both") {
    config.aggregations = {distalign::Aggregation::mean_per_question,
                           distalign::Aggregation::pooled};
  }
  if (!flags.out_dir.empty()) {
    config.out_dir = flags.out_dir;
  }
  if (flags.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(flags.seed);
  }
  if (flags.offline) {
    config.offline = true;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alignment of LLM answer likelihoods with student response "
               "distributions on MCQs"};
  app.require_subcommand(1);

  CommonFlags validate_flags;
  CLI::App* validate =
      app.add_subcommand("validate", "Check config and dataset coherence");
  add_common_flags(validate, validate_flags);

  CommonFlags score_flags;
  CLI::App* score = app.add_subcommand(
      "score", "Score every (model, question, option) into the cache");
  add_common_flags(score, score_flags);

  CommonFlags analyze_flags;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Compute RQ1/RQ2 results from the cache (no network)");
  add_common_flags(analyze, analyze_flags);

  CommonFlags report_flags;
  CLI::App* report = app.add_subcommand(
      "report", "Emit tables and plot-data CSVs from analysis output");
  add_common_flags(report, report_flags);

  std::uint64_t synth_seed = 1;
  int synth_n = 50;
  std::string synth_profile = "perfectly_aligned";
  std::string synth_out = "synthetic";
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic dataset + score table fixture");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--n", synth_n, "Number of questions")
      ->check(CLI::PositiveNumber);
  synth
      ->add_option("--profile", synth_profile,
                   "perfectly_aligned, anti_aligned, or uniform_students")
      ->check(CLI::IsMember(
          {"perfectly_aligned", "anti_aligned", "uniform_students"}));
  synth->add_option("--out", synth_out, "Fixture output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto profile = distalign::parse_profile(synth_profile);
      const auto fixture =
          distalign::generate_synthetic(synth_seed, synth_n, profile);
      const auto config_path = distalign::write_synthetic_fixture(
          fixture, synth_out, synth_seed, profile);
      std::cout << "synth: wrote " << fixture.records.size()
                << " questions, " << fixture.table.size()
                << " table entries, config " << config_path.string() << '\n';
      return kExitOk;
    }
    if (validate->parsed()) {
      const auto config = effective_config(validate_flags);
      const bool clean = distalign::run_validate(config, std::cout);
      return clean ? kExitOk : kExitValidation;
    }
    if (score->parsed()) {
      const auto config = effective_config(score_flags);
      const auto stats = distalign::run_score(config);
      std::cout << "score: requests=" << stats.requests
                << " cache_hits=" << stats.cache_hits
                << " backend_calls=" << stats.backend_calls
                << " questions=" << stats.n_questions << '\n';
      return kExitOk;
    }
    if (analyze->parsed()) {
      const auto config = effective_config(analyze_flags);
      const auto result = distalign::run_analyze(config);
      std::cout << "analyze: " << result.n_questions
                << " questions analyzed; wrote rq1.json, rq2.json, "
                   "dataset_summary.json to "
                << config.out_dir << '\n';
      return kExitOk;
    }
    if (report->parsed()) {
      const auto config = effective_config(report_flags);
      distalign::run_report(config);
      std::cout << "report: wrote rq1_table, rq2_table, size_series to "
                << config.out_dir << '\n';
      return kExitOk;
    }
  } catch (const distalign::EmptyResultsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const distalign::NonFiniteScoreError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const distalign::BackendError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const distalign::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
