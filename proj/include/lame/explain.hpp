#pragma once

// Attention explanations: per predicted label, the head-mean attention of the
// last label attention block over the document tokens, folded onto words.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lame/data.hpp"
#include "lame/model.hpp"
#include "lame/tokenizer.hpp"

namespace lame {

struct LabelExplanation {
  std::size_t label_index = 0;
  std::string label_id;
  double probability = 0.0;
  std::vector<std::string> tokens;
  std::vector<double> token_weights;  // one per token, sums to 1
  std::vector<MergedWord> words;      // specials dropped, weight = max over pieces
};

struct Explanation {
  std::string document_id;
  std::string text;
  std::string strategy;
  std::string config_hash;
  std::string checkpoint_hash;
  std::vector<LabelExplanation> labels;  // predicted labels, in label order
};

Explanation explain_document(const Predictor& predictor, const Vocab& vocab, std::span<const LabelDef> labels,
                             const std::string& document_id, const std::string& text,
                             const std::string& checkpoint_hash = {});

// Indices into `words`, highest weight first, at most top_k. Ties keep text order.
std::vector<std::size_t> top_words(const std::vector<MergedWord>& words, std::size_t top_k);

// Intensity bucket 0..4 of a word among its siblings: floor(5 * rank / n),
// rank = number of words with strictly smaller weight.
int weight_bucket(const std::vector<MergedWord>& words, std::size_t index);
inline constexpr int kWeightBuckets = 5;

// top_k == 0 yields the record with an empty "highlights" list.
nlohmann::json explanation_json(const Explanation& explanation, std::size_t top_k);

// ANSI background shading of the top_k words per label.
std::string render_terminal(const Explanation& explanation, std::size_t top_k);

// Standalone HTML page, one paragraph per (document, label).
std::string render_html(std::span<const Explanation> explanations, std::size_t top_k);

}  // namespace lame
