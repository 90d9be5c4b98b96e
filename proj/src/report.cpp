#include "distalign/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

namespace distalign {

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

namespace {

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) {
    return cell;
  }
  std::string quoted = "\"";
  for (char c : cell) {
    if (c == '"') {
      quoted += '"';
    }
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string optional_fixed(const std::optional<double>& value) {
  return value ? format_fixed(*value) : "NA";
}

const ModelSpec& spec_for(const std::map<std::string, ModelSpec>& specs,
                          const std::string& name) {
  auto it = specs.find(name);
  if (it == specs.end()) {
    throw ValidationError("no model spec for summary model '" + name + "'");
  }
  return it->second;
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) {
      out += ',';
    }
    out += csv_escape(header[i]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) {
        out += ',';
      }
      out += csv_escape(row[i]);
    }
    out += '\n';
  }
  return out;
}

Table build_rq1_table(std::span<const Rq1Summary> summaries,
                      const std::map<std::string, ModelSpec>& specs) {
  std::vector<const Rq1Summary*> sorted;
  std::set<std::tuple<std::string, Approach, Aggregation>> seen;
  for (const auto& s : summaries) {
    if (!seen.insert({s.model, s.approach, s.aggregation}).second) {
      throw ValidationError("duplicate rq1 summary for (" + s.model + ", " +
                            to_string(s.approach) + ", " +
                            to_string(s.aggregation) + ")");
    }
    spec_for(specs, s.model);
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(),
            [&](const Rq1Summary* a, const Rq1Summary* b) {
              const auto key = [&](const Rq1Summary* s) {
                return std::tuple(static_cast<int>(s->approach),
                                  spec_for(specs, s->model).parameter_count,
                                  s->model,
                                  static_cast<int>(s->aggregation));
              };
              return key(a) < key(b);
            });

  Table table;
  table.header = {"model",   "approach",    "aggregation",
                  "pearson", "spearman",    "kendall",
                  "n_questions", "n_degenerate", "template_id"};
  for (const auto* s : sorted) {
    table.rows.push_back({s->model, to_string(s->approach),
                          to_string(s->aggregation), optional_fixed(s->pearson),
                          optional_fixed(s->spearman),
                          optional_fixed(s->kendall),
                          std::to_string(s->n_questions),
                          std::to_string(s->n_degenerate),
                          template_id(s->approach)});
  }
  return table;
}

Table build_rq2_table(std::span<const AlignmentSummary> summaries,
                      const std::map<std::string, ModelSpec>& specs) {
  std::vector<const AlignmentSummary*> sorted;
  std::set<std::pair<std::string, Approach>> seen;
  for (const auto& s : summaries) {
    if (!seen.insert({s.model, s.approach}).second) {
      throw ValidationError("duplicate rq2 summary for (" + s.model + ", " +
                            to_string(s.approach) + ")");
    }
    spec_for(specs, s.model);
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(),
            [&](const AlignmentSummary* a, const AlignmentSummary* b) {
              const auto key = [&](const AlignmentSummary* s) {
                return std::tuple(static_cast<int>(s->approach),
                                  spec_for(specs, s->model).parameter_count,
                                  s->model);
              };
              return key(a) < key(b);
            });

  Table table;
  table.header = {"model",     "approach",  "n_incorrect",
                  "pct_rank1", "pct_rank2", "pct_rank3",
                  "mean_alignment", "template_id"};
  for (const auto* s : sorted) {
    std::vector<std::string> row = {s->model, to_string(s->approach),
                                    std::to_string(s->n_incorrect)};
    if (s->rank_rates) {
      for (double rate : *s->rank_rates) {
        row.push_back(format_fixed(rate * 100.0));
      }
    } else {
      row.insert(row.end(), {"NA", "NA", "NA"});
    }
    row.push_back(optional_fixed(s->mean_alignment));
    row.push_back(template_id(s->approach));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<SizeSeriesPoint> build_size_series(
    std::span<const Rq1Summary> summaries,
    const std::map<std::string, ModelSpec>& specs) {
  std::vector<SizeSeriesPoint> points;
  for (const auto& s : summaries) {
    // The size figure plots per-question means; pooled rows are skipped.
    if (s.aggregation != Aggregation::mean_per_question || !s.pearson) {
      continue;
    }
    const ModelSpec& spec = spec_for(specs, s.model);
    points.push_back({spec.family, spec.variant, spec.parameter_count,
                      s.approach, *s.pearson});
  }
  std::sort(points.begin(), points.end(),
            [](const SizeSeriesPoint& a, const SizeSeriesPoint& b) {
              return std::tuple(a.family, static_cast<int>(a.variant),
                                static_cast<int>(a.approach),
                                a.parameter_count) <
                     std::tuple(b.family, static_cast<int>(b.variant),
                                static_cast<int>(b.approach),
                                b.parameter_count);
            });
  return points;
}

Table size_series_table(std::span<const SizeSeriesPoint> points) {
  Table table;
  table.header = {"family", "variant", "parameter_count", "approach",
                  "pearson"};
  for (const auto& p : points) {
    table.rows.push_back({p.family, to_string(p.variant),
                          format_fixed(p.parameter_count),
                          to_string(p.approach), format_fixed(p.pearson)});
  }
  return table;
}

}  // namespace distalign
