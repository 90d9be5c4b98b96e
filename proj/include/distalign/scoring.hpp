#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "distalign/backend.hpp"
#include "distalign/dataset.hpp"

namespace distalign {

enum class Approach { index, text };

const char* to_string(Approach a);
Approach parse_approach(std::string_view s);

// Versioned prompt templates. All outputs carry these ids so scores from
// different template revisions never mix.
inline constexpr const char* kIndexTemplateId = "v1-index";
inline constexpr const char* kTextTemplateId = "v1-text";

const char* template_id(Approach a);

// A rendered context plus the option-indexed continuations scored against it.
struct PromptBundle {
  std::string context;
  std::vector<std::string> continuations;
};

// "Question: {stem}\nA. {opt0}\n...\nAnswer:" with continuations " A", " B",
// ... Letters run A..Z, so option counts above 26 are rejected.
PromptBundle render_index_prompt(const McqQuestion& q);

// "Question: {stem}\nAnswer:" with continuations " {option text}". Options
// are never listed in the context; each is scored independently.
PromptBundle render_text_prompt(const McqQuestion& q);

PromptBundle render_prompt(Approach a, const McqQuestion& q);

// Per-option log-likelihoods under one approach. Index approach: total
// log-probability of the letter continuation (multi-token letters are
// summed), token_counts all 1. Text approach: mean per-token
// log-probability, token_counts = the continuation's token count.
struct LikelihoodVector {
  std::string question_id;
  Approach approach = Approach::index;
  std::vector<double> log_likelihoods;
  std::vector<int> token_counts;
};

// Softmax-normalized likelihoods. argmax matches the source vector.
struct ChoiceProbabilities {
  std::string question_id;
  Approach approach = Approach::index;
  std::vector<double> probabilities;
};

// Throws BackendError (tagged with the question id) on backend failure or a
// non-finite score.
LikelihoodVector index_loglikelihood(ScoringBackend& backend,
                                     const std::string& model,
                                     const McqQuestion& q);
LikelihoodVector text_loglikelihood(ScoringBackend& backend,
                                    const std::string& model,
                                    const McqQuestion& q);
// template_override, when non-empty, replaces the built-in template id in
// score requests (and therefore in cache keys).
LikelihoodVector option_loglikelihoods(ScoringBackend& backend,
                                       const std::string& model,
                                       const McqQuestion& q, Approach a,
                                       const std::string& template_override =
                                           std::string());

// Max-subtracted softmax.
ChoiceProbabilities normalize(const LikelihoodVector& v);

}  // namespace distalign
