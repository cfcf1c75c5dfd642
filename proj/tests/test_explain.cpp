#include <doctest.h>

#include <numeric>

#include "lame/errors.hpp"
#include "lame/explain.hpp"
#include "support.hpp"

using namespace lame;

namespace {

std::vector<MergedWord> words(std::vector<double> weights) {
  std::vector<MergedWord> out;
  std::size_t pos = 0;
  for (double w : weights) {
    out.push_back({"w" + std::to_string(out.size()), w, {pos, pos + 2}, 0, 0});
    pos += 3;
  }
  return out;
}

struct Setup {
  Vocab vocab{std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "fever", "cough", "rash", "##es", "<b>"}};
  std::vector<LabelDef> labels = {{"F", "flu", "fever cough"}, {"S", "skin", "rash rashes"}};
  ModelConfig config;
  std::vector<TokenizedText> descriptions;

  Setup() {
    config.hidden = 8;
    config.encoder_layers = 1;
    config.encoder_heads = 2;
    config.label_heads = 2;
    config.ffn_mult = 2;
    config.max_sequence_length = 16;
    config.vocab_size = static_cast<int>(vocab.size());
    config.num_labels = 2;
    config.mode = TaskMode::multi_class;
    for (const auto& l : labels) descriptions.push_back(tokenize(l.description, vocab, 16));
  }
};

}  // namespace

TEST_CASE("top words sort by weight and keep text order on ties") {
  const auto w = words({0.1, 0.4, 0.1, 0.4, 0.0});
  CHECK(top_words(w, 3) == std::vector<std::size_t>{1, 3, 0});
  CHECK(top_words(w, 0).empty());
  CHECK(top_words(w, 10).size() == 5);
}

TEST_CASE("weight buckets are rank quantiles") {
  const auto w = words({0.0, 0.1, 0.2, 0.3, 0.4});
  for (std::size_t i = 0; i < 5; ++i) CHECK(weight_bucket(w, i) == static_cast<int>(i));
  const auto ties = words({0.5, 0.5, 0.5});
  for (std::size_t i = 0; i < 3; ++i) CHECK(weight_bucket(ties, i) == 0);
  const auto ten = words({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(weight_bucket(ten, 9) == 4);
  CHECK(weight_bucket(ten, 1) == 0);
  CHECK(weight_bucket(ten, 2) == 1);
}

TEST_CASE("explain_document attaches normalized weights per predicted label") {
  Setup s;
  const LameModel model(s.config, 7, 0.3);
  const Predictor predictor(model, s.descriptions);
  const Explanation e = explain_document(predictor, s.vocab, s.labels, "doc1", "Fever and rashes", "abc123");
  CHECK(e.document_id == "doc1");
  CHECK(e.checkpoint_hash == "abc123");
  CHECK(e.config_hash.size() == 16);
  CHECK(e.strategy == kExplanationStrategy);
  REQUIRE(e.labels.size() == 1);
  const LabelExplanation& le = e.labels[0];
  CHECK(le.tokens.size() == le.token_weights.size());
  CHECK(std::accumulate(le.token_weights.begin(), le.token_weights.end(), 0.0) == doctest::Approx(1.0));
  REQUIRE(le.words.size() == 3);
  CHECK(le.words[2].text == "rashes");
  CHECK(le.words[1].text == "and");

  const nlohmann::json j = explanation_json(e, 2);
  CHECK(j["labels"][0]["highlights"].size() == 2);
  CHECK(explanation_json(e, 0)["labels"][0]["highlights"].empty());
  CHECK(j["checkpoint_hash"] == "abc123");

  CHECK_THROWS_AS(explain_document(predictor, s.vocab, s.labels, "empty", "   "), InputError);
  CHECK_THROWS_AS(explain_document(predictor, s.vocab, std::span<const LabelDef>(s.labels).first(1), "x", "fever"),
                  ContractError);
}

TEST_CASE("renderers shade words and escape markup") {
  Setup s;
  const LameModel model(s.config, 8, 0.3);
  const Predictor predictor(model, s.descriptions);
  const Explanation e = explain_document(predictor, s.vocab, s.labels, "a&b", "<b> cough & fever", "");
  const std::string html = render_html(std::vector<Explanation>{e}, 2);
  CHECK(html.find("&lt;b&gt;") != std::string::npos);
  CHECK(html.find("a&amp;b") != std::string::npos);
  CHECK(html.find("rgba(220,30,30,") != std::string::npos);
  const std::string term = render_terminal(e, 1);
  CHECK(term.find("\x1b[30;48;5;") != std::string::npos);
  CHECK(render_terminal(e, 0).find("\x1b[") == std::string::npos);
}
