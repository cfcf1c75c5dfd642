#include "lame/explain.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "lame/errors.hpp"
#include "lame/hash.hpp"

namespace lame {

Explanation explain_document(const Predictor& predictor, const Vocab& vocab, std::span<const LabelDef> labels,
                             const std::string& document_id, const std::string& text,
                             const std::string& checkpoint_hash) {
  const ModelConfig& config = predictor.model().config();
  if (labels.size() != static_cast<std::size_t>(config.num_labels)) {
    throw ContractError("explain_document: " + std::to_string(labels.size()) + " labels for a model with " +
                        std::to_string(config.num_labels));
  }
  const TokenizedText tokens = tokenize(text, vocab, static_cast<std::size_t>(config.max_sequence_length));
  // [CLS] and [SEP] alone: nothing to explain.
  if (tokens.ids.size() <= 2) throw InputError("document '" + document_id + "' is empty after tokenization");

  const DocumentPrediction pred = predictor.predict(tokens);
  Explanation out;
  out.document_id = document_id;
  out.text = text;
  out.strategy = std::string(kExplanationStrategy);
  out.config_hash = hex_digest(config_hash(config));
  out.checkpoint_hash = checkpoint_hash;
  const std::vector<std::string> strings = token_strings(tokens, vocab);
  for (std::size_t l : pred.predicted) {
    const RowVector scores = explanation_scores(pred.records, l);
    LabelExplanation le;
    le.label_index = l;
    le.label_id = labels[l].id;
    le.probability = pred.probabilities(static_cast<Index>(l));
    le.tokens = strings;
    le.token_weights.assign(scores.data(), scores.data() + scores.size());
    le.words = merge_subword_spans(text, tokens, vocab, le.token_weights);
    out.labels.push_back(std::move(le));
  }
  return out;
}

std::vector<std::size_t> top_words(const std::vector<MergedWord>& words, std::size_t top_k) {
  std::vector<std::size_t> order(words.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return words[a].weight > words[b].weight; });
  order.resize(std::min(top_k, order.size()));
  return order;
}

int weight_bucket(const std::vector<MergedWord>& words, std::size_t index) {
  const double w = words.at(index).weight;
  const auto below = std::count_if(words.begin(), words.end(), [&](const MergedWord& m) { return m.weight < w; });
  return static_cast<int>(kWeightBuckets * below / static_cast<std::ptrdiff_t>(words.size()));
}

nlohmann::json explanation_json(const Explanation& e, std::size_t top_k) {
  nlohmann::json labels = nlohmann::json::array();
  for (const LabelExplanation& le : e.labels) {
    nlohmann::json words = nlohmann::json::array();
    for (const MergedWord& w : le.words) {
      words.push_back({{"word", w.text}, {"weight", w.weight}, {"span", {w.span.begin, w.span.end}}});
    }
    nlohmann::json highlights = nlohmann::json::array();
    for (std::size_t i : top_words(le.words, top_k)) {
      highlights.push_back({{"word", le.words[i].text},
                            {"weight", le.words[i].weight},
                            {"bucket", weight_bucket(le.words, i)},
                            {"span", {le.words[i].span.begin, le.words[i].span.end}}});
    }
    labels.push_back({{"label", le.label_id},
                      {"index", le.label_index},
                      {"probability", le.probability},
                      {"tokens", le.tokens},
                      {"token_weights", le.token_weights},
                      {"words", words},
                      {"highlights", highlights}});
  }
  return {{"document_id", e.document_id},
          {"strategy", e.strategy},
          {"config_hash", e.config_hash},
          {"checkpoint_hash", e.checkpoint_hash},
          {"labels", labels}};
}

namespace {

// Light to dark red backgrounds, xterm-256 palette.
constexpr int kAnsiShades[kWeightBuckets] = {224, 217, 210, 203, 196};
// Background alpha per bucket in the HTML rendering.
constexpr double kHtmlAlpha[kWeightBuckets] = {0.15, 0.3, 0.5, 0.7, 0.9};

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Walks the original text, wrapping highlighted word spans with open/close markup.
template <typename Open, typename Escape>
std::string shade(const std::string& text, const LabelExplanation& le, std::size_t top_k, Open open,
                  std::string_view close, Escape escape) {
  const std::vector<std::size_t> top = top_words(le.words, top_k);
  std::vector<int> bucket(le.words.size(), -1);
  for (std::size_t i : top) bucket[i] = weight_bucket(le.words, i);
  std::string out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < le.words.size(); ++i) {
    const CharSpan& s = le.words[i].span;
    if (bucket[i] < 0 || s.begin < pos) continue;
    out += escape(std::string_view(text).substr(pos, s.begin - pos));
    out += open(bucket[i], le.words[i].weight);
    out += escape(std::string_view(text).substr(s.begin, s.end - s.begin));
    out += close;
    pos = s.end;
  }
  out += escape(std::string_view(text).substr(pos));
  return out;
}

}  // namespace

std::string render_terminal(const Explanation& e, std::size_t top_k) {
  std::ostringstream out;
  out << "document " << e.document_id << '\n';
  if (e.labels.empty()) out << "  (no label predicted)\n";
  for (const LabelExplanation& le : e.labels) {
    out << "  " << le.label_id << " p=" << le.probability << '\n' << "    ";
    out << shade(
               e.text, le, top_k,
               [](int b, double) { return "\x1b[30;48;5;" + std::to_string(kAnsiShades[b]) + "m"; }, "\x1b[0m",
               [](std::string_view s) { return std::string(s); })
        << '\n';
  }
  return out.str();
}

std::string render_html(std::span<const Explanation> explanations, std::size_t top_k) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>explanations</title>\n"
      << "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
      << "p{line-height:1.8}.label{font-weight:bold}</style></head><body>\n"
      << "<p>Background intensity: weight quantile bucket among the document's words (" << kWeightBuckets
      << " buckets).</p>\n";
  for (const Explanation& e : explanations) {
    out << "<h3>" << html_escape(e.document_id) << "</h3>\n";
    for (const LabelExplanation& le : e.labels) {
      out << "<p><span class=\"label\">" << html_escape(le.label_id) << "</span> (p=" << le.probability << ")<br>"
          << shade(
                 e.text, le, top_k,
                 [](int b, double w) {
                   std::ostringstream s;
                   s << "<span style=\"background:rgba(220,30,30," << kHtmlAlpha[b] << ")\" title=\"" << w << "\">";
                   return s.str();
                 },
                 "</span>", html_escape)
          << "</p>\n";
    }
  }
  out << "</body></html>\n";
  return out.str();
}

}  // namespace lame
