#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "lame/errors.hpp"
#include "lame/tokenizer.hpp"

using namespace lame;

namespace {

Vocab small_vocab(std::vector<std::string> extra) {
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  tokens.insert(tokens.end(), extra.begin(), extra.end());
  return Vocab(tokens);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lame_tok_" + name);
}

}  // namespace

TEST_CASE("build_vocab learns frequent merges") {
  const Vocab v = build_vocab({"aa aa aa"}, 10, 1);
  CHECK(v.contains("a"));
  CHECK(v.contains("aa"));
  CHECK(v.size() <= 10);
  CHECK(v.token(0) == "[PAD]");
  CHECK(v.token(1) == "[UNK]");
  CHECK(v.token(2) == "[CLS]");
  CHECK(v.token(3) == "[SEP]");
}

TEST_CASE("build_vocab rejects degenerate inputs") {
  CHECK_THROWS_AS(build_vocab({"aa"}, 4, 1), InputError);
  CHECK_THROWS_AS(build_vocab({}, 50, 1), InputError);
}

TEST_CASE("build_vocab respects target size and token shape") {
  const std::vector<std::string> corpus = {"the cat sat on the mat", "the dog sat on the log", "cats and dogs"};
  for (std::size_t target : {6u, 12u, 30u, 200u}) {
    const Vocab v = build_vocab(corpus, target, 1);
    CHECK(v.size() <= target);
    for (std::size_t i = 4; i < v.size(); ++i) {
      const std::string& t = v.token(static_cast<std::int32_t>(i));
      CHECK(!t.empty());
      if (t.starts_with(kContinuationPrefix)) CHECK(t.size() > kContinuationPrefix.size());
    }
  }
  CHECK(build_vocab(corpus, 40, 1).tokens() == build_vocab(corpus, 40, 1).tokens());
}

TEST_CASE("tokenize uses greedy longest match") {
  const Vocab v = small_vocab({"ab", "##s", "a", "b"});
  const TokenizedText t = tokenize("abs", v, 16);
  CHECK(t.ids == std::vector<std::int32_t>{kClsId, v.find("ab"), v.find("##s"), kSepId});
  CHECK(tokenize("", v, 16).ids == std::vector<std::int32_t>{kClsId, kSepId});
  CHECK(tokenize("zzz", v, 16).ids == std::vector<std::int32_t>{kClsId, kUnkId, kSepId});
  // The first piece matches but the remainder cannot be segmented.
  CHECK(tokenize("abq", v, 16).ids == std::vector<std::int32_t>{kClsId, kUnkId, kSepId});
  CHECK(tokenize("AbS", v, 16).ids == t.ids);
}

TEST_CASE("tokenize truncates but keeps [SEP]") {
  const Vocab v = small_vocab({"a"});
  const TokenizedText t = tokenize("a a a a a a a a", v, 5);
  CHECK(t.ids.size() == 5);
  CHECK(t.ids.front() == kClsId);
  CHECK(t.ids.back() == kSepId);
  CHECK(t.spans.size() == t.ids.size());
  CHECK_THROWS_AS(tokenize("a", v, 2), ContractError);
}

TEST_CASE("spans index the original text and increase") {
  const Vocab v = build_vocab({"alpha beta gamma alphabet betamax"}, 40, 1);
  const std::string text = "  Alpha\tbetamax gamma  ";
  const TokenizedText t = tokenize(text, v, 64);
  std::size_t last_end = 0;
  for (std::size_t i = 1; i + 1 < t.ids.size(); ++i) {
    const CharSpan s = t.spans[i];
    CHECK(s.begin >= last_end);
    CHECK(s.end > s.begin);
    CHECK(s.end <= text.size());
    last_end = s.end;
    std::string piece = v.token(t.ids[i]);
    if (piece.starts_with(kContinuationPrefix)) piece = piece.substr(kContinuationPrefix.size());
    if (t.ids[i] != kUnkId) CHECK(lowercase(text.substr(s.begin, s.end - s.begin)) == piece);
  }
}

TEST_CASE("in-vocabulary words round trip through their pieces") {
  const std::vector<std::string> corpus = {"abscess abdomen absorb cess ab", "absent absence abscess"};
  const Vocab v = build_vocab(corpus, 30, 1);
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"abscess", "abdomen", "absorb", "absent", "absence", "cess"};
  for (const std::string& w : words) {
    const TokenizedText t = tokenize(w, v, 32);
    std::string rebuilt;
    bool unk = false;
    for (std::size_t i = 1; i + 1 < t.ids.size(); ++i) {
      if (t.ids[i] == kUnkId) unk = true;
      std::string piece = v.token(t.ids[i]);
      if (piece.starts_with(kContinuationPrefix)) piece = piece.substr(kContinuationPrefix.size());
      rebuilt += piece;
    }
    if (!unk) CHECK(rebuilt == w);
  }
}

TEST_CASE("merge_subwords max-pools continuation pieces") {
  auto merged = merge_subwords({"abs", "##cess"}, {0.1, 0.7});
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].first == "abscess");
  CHECK(merged[0].second == 0.7);

  merged = merge_subwords({"a", "b"}, {0.25, 0.75});
  REQUIRE(merged.size() == 2);
  CHECK(merged[0] == std::pair<std::string, double>{"a", 0.25});
  CHECK(merged[1] == std::pair<std::string, double>{"b", 0.75});

  merged = merge_subwords({"##s"}, {0.4});
  REQUIRE(merged.size() == 1);
  CHECK(merged[0] == std::pair<std::string, double>{"##s", 0.4});

  CHECK_THROWS_AS(merge_subwords({"a"}, {0.1, 0.2}), ContractError);
}

TEST_CASE("merge_subword_spans recovers surface words") {
  const Vocab v = small_vocab({"abs", "##cess", "of", "liver"});
  const std::string text = "Abscess of LIVER";
  const TokenizedText t = tokenize(text, v, 16);
  const std::vector<double> w = {0.05, 0.1, 0.5, 0.05, 0.25, 0.05};
  REQUIRE(w.size() == t.ids.size());
  const auto words = merge_subword_spans(text, t, v, w);
  REQUIRE(words.size() == 3);
  CHECK(words[0].text == "Abscess");
  CHECK(words[0].weight == 0.5);
  CHECK(words[0].span == CharSpan{0, 7});
  CHECK(words[2].text == "LIVER");
  CHECK(words[2].span == CharSpan{11, 16});
}

TEST_CASE("vocab files round trip and validate") {
  const Vocab v = build_vocab({"one two three two one"}, 20, 1);
  const auto path = temp_path("vocab.txt");
  v.save(path);
  const Vocab back = Vocab::load(path);
  CHECK(back.tokens() == v.tokens());
  CHECK(back.hash() == v.hash());

  std::ofstream(path) << "[UNK]\n[PAD]\n[CLS]\n[SEP]\na\n";
  CHECK_THROWS_AS(Vocab::load(path), InputError);
  std::ofstream(path) << "[PAD]\n[UNK]\n[CLS]\n[SEP]\na\na\n";
  CHECK_THROWS_AS(Vocab::load(path), InputError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Vocab::load(path), InputError);
}

TEST_CASE("vocab hash depends on content") {
  CHECK(small_vocab({"a"}).hash() != small_vocab({"b"}).hash());
  CHECK(small_vocab({"a", "b"}).hash() != small_vocab({"b", "a"}).hash());
}
