#include "distalign/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include "distalign/correlation.hpp"
#include "distalign/error_analysis.hpp"
#include "distalign/http_backend.hpp"
#include "distalign/report.hpp"
#include "distalign/scoring.hpp"

namespace distalign {

using nlohmann::json;

namespace {

std::unique_ptr<ScoringBackend> make_inner_backend(const RunConfig& config,
                                                   const ModelSpec& model) {
  if (model.is_table()) {
    return load_table_backend(config.backend.table_path,
                              config.backend.table_fallback,
                              config.backend.table_vocab);
  }
  if (config.offline) {
    return nullptr;  // cache-only; misses surface as BackendError
  }
  HttpBackendOptions options;
  options.endpoint =
      model.endpoint.empty() ? config.backend.endpoint : model.endpoint;
  options.auth_env = config.backend.auth_env;
  options.max_attempts = config.backend.retries;
  return std::make_unique<HttpBackend>(std::move(options));
}

std::vector<DatasetRecord> load_filtered(const RunConfig& config) {
  auto records = load_dataset(config.dataset_path);
  records = filter_dataset(std::move(records), config.filter);
  std::sort(records.begin(), records.end(),
            [](const DatasetRecord& a, const DatasetRecord& b) {
              return a.question.id < b.question.id;
            });
  return records;
}

void run_parallel(int n_workers, std::size_t n_items,
                  const std::function<void(std::size_t)>& fn) {
  if (n_items == 0) {
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) {
        return;
      }
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n_items) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) {
            first_error = std::current_exception();
          }
        }
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const int workers = std::min<std::size_t>(
      std::max(n_workers, 1), n_items);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path.string());
  }
  out << content;
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

json load_json_file(const std::filesystem::path& path,
                    const std::string& hint) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open " + path.string() + "; " + hint);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json optional_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

std::optional<double> optional_from(const json& value) {
  if (value.is_null()) {
    return std::nullopt;
  }
  return value.get<double>();
}

json tie_rules() {
  return {{"spearman", "average ranks on ties"},
          {"kendall",
           "tau-a; pairs tied in either vector are neither concordant nor "
           "discordant"},
          {"model_argmax", "ties resolve to the lowest option index"},
          {"distractor_rank",
           "tied student fractions give the better rank to the lower option "
           "index"},
          {"degenerate",
           "zero-variance questions are flagged and excluded from means, "
           "never imputed"}};
}

constexpr const char* kWeightingNote =
    "question_weighted (each question counts once, regardless of its "
    "respondent count)";

json dataset_summary_json(const RunConfig& config, const DatasetSummary& s,
                          std::size_t n_before_filter) {
  json per_subject = json::object();
  for (const auto& [subject, stats] : s.per_subject) {
    per_subject[subject] = {{"n_questions", stats.n_questions},
                            {"mean_correctness", stats.mean_correctness}};
  }
  return {{"n_questions", s.n_questions},
          {"n_before_filter", n_before_filter},
          {"overall_correctness", s.overall_correctness},
          {"per_subject", std::move(per_subject)},
          {"correctness_weighting", kWeightingNote},
          {"filter",
           {{"min_respondents", config.filter.min_respondents},
            {"min_error_rate", config.filter.min_error_rate},
            {"required_option_count", config.filter.required_option_count}}}};
}

}  // namespace

ModelApproachAnalysis analyze_records(ScoringBackend& backend,
                                      const std::string& model,
                                      Approach approach,
                                      const std::string& template_id,
                                      std::span<const DatasetRecord> records) {
  ModelApproachAnalysis out;
  for (const auto& record : records) {
    LikelihoodVector lv;
    try {
      lv = option_loglikelihoods(backend, model, record.question, approach,
                                 template_id);
    } catch (const NonFiniteScoreError&) {
      out.excluded.push_back(record.question.id);
      continue;
    }
    const ChoiceProbabilities probs = normalize(lv);
    out.correlations.push_back(correlate_question(
        probs, record.responses, record.question.correct_index));
    out.choices.push_back(
        analyze_choice(record.question, record.responses, probs));
  }
  return out;
}

bool run_validate(const RunConfig& config, std::ostream& diagnostics) {
  try {
    config.check_coherence();
  } catch (const ValidationError& e) {
    diagnostics << "config: " << e.what() << '\n';
    return false;
  }

  std::ifstream in(config.dataset_path);
  if (!in) {
    diagnostics << "dataset: cannot open " << config.dataset_path << '\n';
    return false;
  }
  const auto problems = validate_dataset(in);
  for (const auto& p : problems) {
    diagnostics << "dataset line " << p.line << ": " << p.reason << '\n';
  }
  if (!problems.empty()) {
    return false;
  }

  const auto records = load_filtered(config);
  diagnostics << "dataset ok: " << records.size()
              << " questions survive filtering\n";
  if (!records.empty()) {
    const auto summary = summarize_dataset(records);
    diagnostics << "overall correctness "
                << format_fixed(summary.overall_correctness) << " across "
                << summary.per_subject.size() << " subjects\n";
  }
  return true;
}

ScoreStats run_score(const RunConfig& config) {
  config.check_coherence();
  const auto records = load_filtered(config);

  const std::filesystem::path cache_path(config.cache_path);
  if (cache_path.has_parent_path()) {
    std::filesystem::create_directories(cache_path.parent_path());
  }
  ResponseCache cache(cache_path);

  ScoreStats stats;
  stats.n_questions = static_cast<int>(records.size());

  for (const auto& model : config.models) {
    auto inner = make_inner_backend(config, model);
    CachingBackend backend(cache, inner.get());

    struct WorkItem {
      Approach approach;
      const DatasetRecord* record;
    };
    std::vector<WorkItem> items;
    for (auto approach : config.approaches) {
      for (const auto& record : records) {
        items.push_back({approach, &record});
      }
    }

    run_parallel(config.backend.concurrency, items.size(),
                 [&](std::size_t i) {
                   const WorkItem& item = items[i];
                   option_loglikelihoods(backend, model.name,
                                         item.record->question, item.approach,
                                         config.template_for(item.approach));
                 });

    stats.requests += backend.call_count();
    stats.backend_calls += inner ? inner->call_count() : 0;
  }
  stats.cache_hits = stats.requests - stats.backend_calls;
  return stats;
}

AnalysisResult run_analyze(const RunConfig& config) {
  config.check_coherence();
  const auto records = load_filtered(config);
  if (records.empty()) {
    throw EmptyResultsError("no questions survive filtering; nothing to "
                            "analyze");
  }
  const std::size_t n_before =
      load_dataset(config.dataset_path).size();

  ResponseCache cache(config.cache_path);
  CachingBackend backend(cache, nullptr);  // cache-only: analyze is offline

  std::vector<Rq1Summary> rq1_summaries;
  std::vector<AlignmentSummary> rq2_summaries;
  json per_question = json::array();
  json rq2_records = json::array();
  json excluded_meta = json::array();

  for (const auto& model : config.models) {
    for (auto approach : config.approaches) {
      auto analysis = analyze_records(backend, model.name, approach,
                                      config.template_for(approach), records);
      auto& correlations = analysis.correlations;
      auto& choices = analysis.choices;
      auto& excluded = analysis.excluded;

      for (const auto& qc : correlations) {
        per_question.push_back({{"question_id", qc.question_id},
                                {"model", model.name},
                                {"approach", to_string(approach)},
                                {"n_points", qc.pearson.n_points},
                                {"pearson", optional_json(qc.pearson.value)},
                                {"spearman", optional_json(qc.spearman.value)},
                                {"kendall", optional_json(qc.kendall.value)}});
      }
      for (const auto& r : choices) {
        rq2_records.push_back(
            {{"question_id", r.question_id},
             {"model", model.name},
             {"approach", to_string(approach)},
             {"selected", r.selected},
             {"error", r.error},
             {"alignment", optional_json(r.alignment)},
             {"rank", r.rank ? json(to_string(*r.rank)) : json(nullptr)}});
      }
      excluded_meta.push_back({{"model", model.name},
                               {"approach", to_string(approach)},
                               {"question_ids", excluded}});

      for (auto aggregation : config.aggregations) {
        rq1_summaries.push_back(aggregate_correlations(
            model.name, approach, correlations, aggregation));
      }
      rq2_summaries.push_back(
          summarize_errors(model.name, approach, std::move(choices)));
    }
  }

  json approaches_json = json::array();
  for (auto a : config.approaches) {
    approaches_json.push_back(to_string(a));
  }
  json aggregations_json = json::array();
  for (auto a : config.aggregations) {
    aggregations_json.push_back(to_string(a));
  }
  const json metadata = {
      {"template_ids",
       {{"index", config.index_template_id},
        {"text", config.text_template_id}}},
      {"approaches", std::move(approaches_json)},
      {"aggregations", std::move(aggregations_json)},
      {"tie_rules", tie_rules()},
      {"correctness_weighting", kWeightingNote},
      {"cache_state_hash", cache.state_hash()},
      {"excluded", std::move(excluded_meta)},
      {"n_questions", records.size()},
      {"config", config.to_json()}};

  AnalysisResult result;
  result.n_questions = static_cast<int>(records.size());

  json rq1_rows = json::array();
  for (const auto& s : rq1_summaries) {
    rq1_rows.push_back({{"model", s.model},
                        {"approach", to_string(s.approach)},
                        {"aggregation", to_string(s.aggregation)},
                        {"pearson", optional_json(s.pearson)},
                        {"spearman", optional_json(s.spearman)},
                        {"kendall", optional_json(s.kendall)},
                        {"n_questions", s.n_questions},
                        {"n_degenerate", s.n_degenerate}});
  }
  result.rq1 = {{"metadata", metadata},
                {"summaries", std::move(rq1_rows)},
                {"per_question", std::move(per_question)}};

  json rq2_rows = json::array();
  for (const auto& s : rq2_summaries) {
    json rates(nullptr);
    if (s.rank_rates) {
      rates = json::array({(*s.rank_rates)[0], (*s.rank_rates)[1],
                           (*s.rank_rates)[2]});
    }
    rq2_rows.push_back({{"model", s.model},
                        {"approach", to_string(s.approach)},
                        {"n_questions", s.n_questions},
                        {"n_incorrect", s.n_incorrect},
                        {"rank_rates", std::move(rates)},
                        {"mean_alignment", optional_json(s.mean_alignment)}});
  }
  result.rq2 = {{"metadata", metadata},
                {"summaries", std::move(rq2_rows)},
                {"records", std::move(rq2_records)}};

  result.dataset_summary =
      dataset_summary_json(config, summarize_dataset(records), n_before);

  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);
  write_json_file(out_dir / "rq1.json", result.rq1);
  write_json_file(out_dir / "rq2.json", result.rq2);
  write_json_file(out_dir / "dataset_summary.json", result.dataset_summary);
  return result;
}

void run_report(const RunConfig& config) {
  const std::filesystem::path out_dir(config.out_dir);
  const json rq1 = load_json_file(out_dir / "rq1.json",
                                  "run the analyze stage first");
  const json rq2 = load_json_file(out_dir / "rq2.json",
                                  "run the analyze stage first");

  std::vector<Rq1Summary> rq1_summaries;
  for (const auto& row : rq1.at("summaries")) {
    Rq1Summary s;
    s.model = row.at("model").get<std::string>();
    s.approach = parse_approach(row.at("approach").get<std::string>());
    s.aggregation =
        parse_aggregation(row.at("aggregation").get<std::string>());
    s.pearson = optional_from(row.at("pearson"));
    s.spearman = optional_from(row.at("spearman"));
    s.kendall = optional_from(row.at("kendall"));
    s.n_questions = row.at("n_questions").get<int>();
    s.n_degenerate = row.at("n_degenerate").get<int>();
    rq1_summaries.push_back(std::move(s));
  }

  std::vector<AlignmentSummary> rq2_summaries;
  for (const auto& row : rq2.at("summaries")) {
    AlignmentSummary s;
    s.model = row.at("model").get<std::string>();
    s.approach = parse_approach(row.at("approach").get<std::string>());
    s.n_questions = row.at("n_questions").get<int>();
    s.n_incorrect = row.at("n_incorrect").get<int>();
    if (!row.at("rank_rates").is_null()) {
      const auto& rates = row.at("rank_rates");
      s.rank_rates = {rates.at(0).get<double>(), rates.at(1).get<double>(),
                      rates.at(2).get<double>()};
    }
    s.mean_alignment = optional_from(row.at("mean_alignment"));
    rq2_summaries.push_back(std::move(s));
  }

  if (rq1_summaries.empty() && rq2_summaries.empty()) {
    throw EmptyResultsError("no data: analysis produced no summaries");
  }
  bool any_question = false;
  for (const auto& s : rq1_summaries) {
    any_question = any_question || s.n_questions > 0;
  }
  for (const auto& s : rq2_summaries) {
    any_question = any_question || s.n_questions > 0;
  }
  if (!any_question) {
    throw EmptyResultsError("no data: every summary covers zero questions");
  }

  std::map<std::string, ModelSpec> specs;
  for (const auto& m : config.models) {
    specs[m.name] = m;
  }

  const Table rq1_table = build_rq1_table(rq1_summaries, specs);
  const Table rq2_table = build_rq2_table(rq2_summaries, specs);
  const auto series = build_size_series(rq1_summaries, specs);
  const Table series_table = size_series_table(series);

  write_text_file(out_dir / "rq1_table.csv", rq1_table.to_csv());
  write_text_file(out_dir / "rq2_table.csv", rq2_table.to_csv());
  write_text_file(out_dir / "size_series.csv", series_table.to_csv());

  // JSON mirrors keep full precision plus the analysis metadata.
  write_json_file(out_dir / "rq1_table.json",
                  {{"metadata", rq1.at("metadata")},
                   {"rows", rq1.at("summaries")}});
  write_json_file(out_dir / "rq2_table.json",
                  {{"metadata", rq2.at("metadata")},
                   {"rows", rq2.at("summaries")}});
  json points = json::array();
  for (const auto& p : series) {
    points.push_back({{"family", p.family},
                      {"variant", to_string(p.variant)},
                      {"parameter_count", p.parameter_count},
                      {"approach", to_string(p.approach)},
                      {"pearson", p.pearson}});
  }
  write_json_file(out_dir / "size_series.json",
                  {{"metadata", rq1.at("metadata")},
                   {"points", std::move(points)}});
}

}  // namespace distalign
