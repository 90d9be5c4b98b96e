#include "distalign/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace distalign {

const char* to_string(Approach a) {
  return a == Approach::index ? "index" : "text";
}

Approach parse_approach(std::string_view s) {
  if (s == "index") {
    return Approach::index;
  }
  if (s == "text") {
    return Approach::text;
  }
  throw ValidationError("unknown approach '" + std::string(s) + "'");
}

const char* template_id(Approach a) {
  return a == Approach::index ? kIndexTemplateId : kTextTemplateId;
}

PromptBundle render_index_prompt(const McqQuestion& q) {
  const int m = q.option_count();
  if (m > 26) {
    throw ValidationError("index prompt supports at most 26 options, got " +
                          std::to_string(m));
  }
  PromptBundle bundle;
  bundle.context = "Question: " + q.stem + "\n";
  for (int j = 0; j < m; ++j) {
    const char letter = static_cast<char>('A' + j);
    bundle.context += letter;
    bundle.context += ". ";
    bundle.context += q.options[j];
    bundle.context += '\n';
  }
  bundle.context += "Answer:";
  for (int j = 0; j < m; ++j) {
    bundle.continuations.push_back(std::string(" ") +
                                   static_cast<char>('A' + j));
  }
  return bundle;
}

PromptBundle render_text_prompt(const McqQuestion& q) {
  PromptBundle bundle;
  bundle.context = "Question: " + q.stem + "\nAnswer:";
  for (const auto& option : q.options) {
    bundle.continuations.push_back(" " + option);
  }
  return bundle;
}

PromptBundle render_prompt(Approach a, const McqQuestion& q) {
  return a == Approach::index ? render_index_prompt(q) : render_text_prompt(q);
}

namespace {

LikelihoodVector score_bundle(ScoringBackend& backend, const std::string& model,
                              const McqQuestion& q, Approach approach,
                              const std::string& template_override) {
  const PromptBundle bundle = render_prompt(approach, q);
  const std::string tid =
      template_override.empty() ? template_id(approach) : template_override;
  LikelihoodVector v;
  v.question_id = q.id;
  v.approach = approach;
  for (const auto& continuation : bundle.continuations) {
    ScoreRequest request{model, tid, bundle.context, continuation};
    ScoreResponse response;
    try {
      response = backend.score(request);
    } catch (const BackendError& e) {
      throw BackendError("question '" + q.id + "': " + e.what());
    }
    if (response.tokens.empty()) {
      throw BackendError("question '" + q.id +
                         "': empty tokenization for continuation '" +
                         continuation + "'");
    }
    double sum = 0.0;
    for (const auto& token : response.tokens) {
      sum += token.logprob;
    }
    const double value =
        approach == Approach::index
            ? sum
            : sum / static_cast<double>(response.tokens.size());
    if (!std::isfinite(value)) {
      throw NonFiniteScoreError("question '" + q.id +
                                "': non-finite score for continuation '" +
                                continuation + "'");
    }
    v.log_likelihoods.push_back(value);
    // The index approach treats the letter as one unit even when the
    // backend splits it into several tokens.
    v.token_counts.push_back(approach == Approach::index
                                 ? 1
                                 : response.token_count());
  }
  return v;
}

}  // namespace

LikelihoodVector index_loglikelihood(ScoringBackend& backend,
                                     const std::string& model,
                                     const McqQuestion& q) {
  return score_bundle(backend, model, q, Approach::index, {});
}

LikelihoodVector text_loglikelihood(ScoringBackend& backend,
                                    const std::string& model,
                                    const McqQuestion& q) {
  return score_bundle(backend, model, q, Approach::text, {});
}

LikelihoodVector option_loglikelihoods(ScoringBackend& backend,
                                       const std::string& model,
                                       const McqQuestion& q, Approach a,
                                       const std::string& template_override) {
  return score_bundle(backend, model, q, a, template_override);
}

ChoiceProbabilities normalize(const LikelihoodVector& v) {
  ChoiceProbabilities p;
  p.question_id = v.question_id;
  p.approach = v.approach;
  if (v.log_likelihoods.empty()) {
    return p;
  }
  const double max_ll =
      *std::max_element(v.log_likelihoods.begin(), v.log_likelihoods.end());
  double sum = 0.0;
  for (double ll : v.log_likelihoods) {
    const double e = std::exp(ll - max_ll);
    p.probabilities.push_back(e);
    sum += e;
  }
  for (double& prob : p.probabilities) {
    prob /= sum;
  }
  return p;
}

}  // namespace distalign
