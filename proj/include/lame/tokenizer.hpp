#pragma once

// WordPiece-style subword vocabulary and greedy longest-match tokenization.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lame {

inline constexpr std::string_view kContinuationPrefix = "##";

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

class Vocab {
 public:
  // Builds from an ordered token list; ids are positions. The first four
  // tokens must be [PAD], [UNK], [CLS], [SEP].
  explicit Vocab(std::vector<std::string> tokens);

  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::int32_t id) const;
  // -1 when absent.
  std::int32_t find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) >= 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Stable 64-bit FNV-1a digest of the serialized vocabulary.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

struct TokenizedText {
  std::vector<std::int32_t> ids;
  // One span per id; specials get an empty span at their anchor position.
  std::vector<CharSpan> spans;
};

// Frequency-greedy pair merging over the lowercased, whitespace-split corpus.
Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t target_size,
                  std::size_t min_frequency);

// Lowercase + whitespace split; each word segmented greedily from the left.
// Words that cannot be fully segmented become a single [UNK].
TokenizedText tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len);

// Token strings for the ids in `text` (specials included).
std::vector<std::string> token_strings(const TokenizedText& text, const Vocab& vocab);

// Folds "##" pieces into the preceding word; merged weight is the max.
std::vector<std::pair<std::string, double>> merge_subwords(const std::vector<std::string>& tokens,
                                                           const std::vector<double>& weights);

struct MergedWord {
  std::string text;
  double weight = 0.0;
  CharSpan span;
  // Token positions [first, last] the word was assembled from.
  std::size_t first_token = 0;
  std::size_t last_token = 0;
};

// Word-level view of a tokenized document with the surface form taken from
// the original text. Special tokens are skipped.
std::vector<MergedWord> merge_subword_spans(std::string_view original, const TokenizedText& tokens,
                                            const Vocab& vocab, const std::vector<double>& weights);

std::string lowercase(std::string_view text);

}  // namespace lame
