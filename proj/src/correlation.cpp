#include "distalign/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace distalign {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("correlation: length mismatch (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("correlation: need at least 2 points, got " +
                                std::to_string(x.size()));
  }
}

bool all_equal(std::span<const double> v) {
  for (double d : v) {
    if (d != v.front()) {
      return false;
    }
  }
  return true;
}

}  // namespace

const char* to_string(CorrelationMethod m) {
  switch (m) {
    case CorrelationMethod::pearson:
      return "pearson";
    case CorrelationMethod::spearman:
      return "spearman";
    case CorrelationMethod::kendall:
      return "kendall";
  }
  return "?";
}

const char* to_string(Aggregation a) {
  return a == Aggregation::mean_per_question ? "mean_per_question" : "pooled";
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "mean_per_question" || s == "mean") {
    return Aggregation::mean_per_question;
  }
  if (s == "pooled") {
    return Aggregation::pooled;
  }
  throw ValidationError("unknown aggregation '" + std::string(s) + "'");
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    // Positions i..j (0-based) share the mean rank of positions i+1..j+1.
    const double shared = static_cast<double>(i + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = shared;
    }
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  check_lengths(x, y);
  // Constant vectors have zero variance by definition; testing the raw
  // values avoids calling them non-degenerate on mean-rounding noise.
  if (all_equal(x) || all_equal(y)) {
    return std::nullopt;
  }
  const std::size_t n = x.size();

  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double cross = 0.0;
  double norm_x = 0.0;
  double norm_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    cross += dx * dy;
    norm_x += dx * dx;
    norm_y += dy * dy;
  }
  if (norm_x == 0.0 || norm_y == 0.0) {
    return std::nullopt;
  }
  const double r = cross / (std::sqrt(norm_x) * std::sqrt(norm_y));
  return std::clamp(r, -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y) {
  check_lengths(x, y);
  return pearson(average_ranks(x), average_ranks(y));
}

std::optional<double> kendall(std::span<const double> x,
                              std::span<const double> y) {
  check_lengths(x, y);
  const std::size_t n = x.size();

  long long concordant = 0;
  long long discordant = 0;
  long long comparable = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 || dy == 0.0) {
        continue;  // tie in either vector: neither concordant nor discordant
      }
      ++comparable;
      if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  if (comparable == 0) {
    return std::nullopt;
  }
  const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
  return 2.0 * static_cast<double>(concordant - discordant) / denom;
}

std::optional<double> correlate(CorrelationMethod method,
                                std::span<const double> x,
                                std::span<const double> y) {
  switch (method) {
    case CorrelationMethod::pearson:
      return pearson(x, y);
    case CorrelationMethod::spearman:
      return spearman(x, y);
    case CorrelationMethod::kendall:
      return kendall(x, y);
  }
  throw std::invalid_argument("unknown correlation method");
}

namespace {

std::pair<std::vector<double>, std::vector<double>> distractor_vectors(
    const ChoiceProbabilities& p, const StudentDistribution& s,
    int correct_index) {
  const int m = static_cast<int>(p.probabilities.size());
  if (static_cast<int>(s.fractions.size()) != m) {
    throw std::invalid_argument("question_correlation: option count mismatch");
  }
  if (correct_index < 0 || correct_index >= m) {
    throw std::invalid_argument("question_correlation: bad correct index");
  }
  std::vector<double> model;
  std::vector<double> students;
  model.reserve(m - 1);
  students.reserve(m - 1);
  for (int j = 0; j < m; ++j) {
    if (j == correct_index) {
      continue;
    }
    model.push_back(p.probabilities[j]);
    students.push_back(s.fractions[j]);
  }
  return {std::move(model), std::move(students)};
}

}  // namespace

CorrelationResult question_correlation(const ChoiceProbabilities& p,
                                       const StudentDistribution& s,
                                       int correct_index,
                                       CorrelationMethod method) {
  auto [model, students] = distractor_vectors(p, s, correct_index);
  CorrelationResult result;
  result.question_id = p.question_id;
  result.method = method;
  result.n_points = static_cast<int>(model.size());
  result.value = correlate(method, model, students);
  return result;
}

QuestionCorrelations correlate_question(const ChoiceProbabilities& p,
                                        const StudentDistribution& s,
                                        int correct_index) {
  auto [model, students] = distractor_vectors(p, s, correct_index);
  QuestionCorrelations qc;
  qc.question_id = p.question_id;
  qc.model_distractors = std::move(model);
  qc.student_distractors = std::move(students);
  for (auto method : {CorrelationMethod::pearson, CorrelationMethod::spearman,
                      CorrelationMethod::kendall}) {
    CorrelationResult r;
    r.question_id = p.question_id;
    r.method = method;
    r.n_points = static_cast<int>(qc.model_distractors.size());
    r.value = correlate(method, qc.model_distractors, qc.student_distractors);
    switch (method) {
      case CorrelationMethod::pearson:
        qc.pearson = r;
        break;
      case CorrelationMethod::spearman:
        qc.spearman = r;
        break;
      case CorrelationMethod::kendall:
        qc.kendall = r;
        break;
    }
  }
  return qc;
}

namespace {

bool constant_vector(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [&](double d) { return d == v.front(); });
}

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) {
    return std::nullopt;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  return sum / static_cast<double>(values.size());
}

}  // namespace

Rq1Summary aggregate_correlations(const std::string& model, Approach approach,
                                  std::vector<QuestionCorrelations> results,
                                  Aggregation mode) {
  std::sort(results.begin(), results.end(),
            [](const QuestionCorrelations& a, const QuestionCorrelations& b) {
              return a.question_id < b.question_id;
            });

  Rq1Summary summary;
  summary.model = model;
  summary.approach = approach;
  summary.aggregation = mode;
  summary.n_questions = static_cast<int>(results.size());
  for (const auto& qc : results) {
    if (constant_vector(qc.model_distractors) ||
        constant_vector(qc.student_distractors)) {
      ++summary.n_degenerate;
    }
  }

  if (mode == Aggregation::mean_per_question) {
    std::vector<double> ps;
    std::vector<double> ss;
    std::vector<double> ks;
    for (const auto& qc : results) {
      if (qc.pearson.value) ps.push_back(*qc.pearson.value);
      if (qc.spearman.value) ss.push_back(*qc.spearman.value);
      if (qc.kendall.value) ks.push_back(*qc.kendall.value);
    }
    summary.pearson = mean_of(ps);
    summary.spearman = mean_of(ss);
    summary.kendall = mean_of(ks);
    return summary;
  }

  std::vector<double> model_all;
  std::vector<double> student_all;
  for (const auto& qc : results) {
    model_all.insert(model_all.end(), qc.model_distractors.begin(),
                     qc.model_distractors.end());
    student_all.insert(student_all.end(), qc.student_distractors.begin(),
                       qc.student_distractors.end());
  }
  if (model_all.size() >= 2) {
    summary.pearson = pearson(model_all, student_all);
    summary.spearman = spearman(model_all, student_all);
    summary.kendall = kendall(model_all, student_all);
  }
  return summary;
}

}  // namespace distalign
