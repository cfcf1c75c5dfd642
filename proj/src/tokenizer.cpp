#include "lame/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "lame/errors.hpp"
#include "lame/hash.hpp"

namespace lame {

namespace {

constexpr std::string_view kSpecials[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_continuation(std::string_view token) { return token.starts_with(kContinuationPrefix); }

bool is_special_token(std::string_view token) {
  return std::find(std::begin(kSpecials), std::end(kSpecials), token) != std::end(kSpecials);
}

struct WordSlice {
  std::size_t begin;
  std::size_t end;
};

std::vector<WordSlice> split_words(std::string_view text) {
  std::vector<WordSlice> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > begin) words.push_back({begin, i});
  }
  return words;
}

// Greedy longest match from the left. Empty result means the word is unmatchable.
std::vector<std::pair<std::int32_t, CharSpan>> segment_word(std::string_view word, std::size_t offset,
                                                            const Vocab& vocab) {
  std::vector<std::pair<std::int32_t, CharSpan>> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < word.size()) {
    std::int32_t found = -1;
    std::size_t end = word.size();
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate.append(kContinuationPrefix);
      candidate.append(word.substr(start, end - start));
      found = vocab.find(candidate);
      if (found >= 0) break;
    }
    if (found < 0) {
      return {};
    }
    pieces.emplace_back(found, CharSpan{offset + start, offset + end});
    start = end;
  }
  return pieces;
}

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// ---- Vocab -------------------------------------------------------------------

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 4) {
    throw InputError("vocabulary needs the four special tokens, got " + std::to_string(tokens_.size()) +
                     " entries");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (tokens_[i] != kSpecials[i]) {
      throw InputError("vocabulary line " + std::to_string(i) + " must be " + std::string(kSpecials[i]) +
                       ", found '" + tokens_[i] + "'");
    }
  }
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& tok = tokens_[i];
    if (tok.empty() || tok == kContinuationPrefix ||
        std::any_of(tok.begin(), tok.end(), is_space)) {
      throw InputError("vocabulary line " + std::to_string(i) + ": invalid token '" + tok + "'");
    }
    if (!ids_.emplace(tok, static_cast<std::int32_t>(i)).second) {
      throw InputError("vocabulary line " + std::to_string(i) + ": duplicate token '" + tok + "'");
    }
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open vocabulary file " + path.string());
  }
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return Vocab(std::move(tokens));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write vocabulary file " + path.string());
  }
  for (const std::string& tok : tokens_) {
    out << tok << '\n';
  }
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::int32_t Vocab::find(std::string_view token) const {
  // Heterogeneous lookup needs C++20 transparent hashing; a temporary is fine here.
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

std::uint64_t Vocab::hash() const {
  Fnv1a h;
  for (const std::string& tok : tokens_) {
    h.update(tok);
    h.update("\n");
  }
  return h.digest();
}

// ---- build_vocab -----------------------------------------------------------------

Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t target_size,
                  std::size_t min_frequency) {
  if (target_size <= 4) {
    throw InputError("target vocabulary size must exceed the 4 special tokens, got " +
                     std::to_string(target_size));
  }
  std::map<std::string, std::size_t> word_counts;
  for (const std::string& doc : corpus) {
    const std::string lower = lowercase(doc);
    for (const WordSlice& w : split_words(lower)) {
      ++word_counts[lower.substr(w.begin, w.end - w.begin)];
    }
  }
  if (word_counts.empty()) {
    throw InputError("cannot build a vocabulary from an empty corpus");
  }

  struct Word {
    std::vector<std::string> symbols;
    std::size_t count;
  };
  std::vector<Word> words;
  std::map<std::string, std::size_t> char_counts;
  for (const auto& [text, count] : word_counts) {
    Word w{{}, count};
    for (std::size_t i = 0; i < text.size(); ++i) {
      std::string sym = i == 0 ? std::string(1, text[i]) : std::string(kContinuationPrefix) + text[i];
      char_counts[sym] += count;
      w.symbols.push_back(std::move(sym));
    }
    words.push_back(std::move(w));
  }

  // Alphabet: frequent characters first when there is not room for all of them.
  std::vector<std::pair<std::string, std::size_t>> alphabet;
  for (const auto& [sym, count] : char_counts) {
    if (count >= min_frequency) alphabet.emplace_back(sym, count);
  }
  std::stable_sort(alphabet.begin(), alphabet.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (alphabet.size() > target_size - 4) alphabet.resize(target_size - 4);
  std::sort(alphabet.begin(), alphabet.end());

  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  std::set<std::string> known;
  for (const auto& [sym, count] : alphabet) {
    tokens.push_back(sym);
    known.insert(sym);
  }

  // Words containing characters outside the alphabet always tokenize to [UNK].
  std::erase_if(words, [&](const Word& w) {
    return std::any_of(w.symbols.begin(), w.symbols.end(),
                       [&](const std::string& s) { return !known.contains(s); });
  });

  const std::size_t min_pair = std::max<std::size_t>(min_frequency, 1);
  while (tokens.size() < target_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const Word& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;
      }
    }
    // Highest count wins; ties go to the lexicographically smallest pair.
    const std::pair<std::string, std::string>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < min_pair) {
      break;
    }
    const std::string left = best->first;
    const std::string right = best->second;
    const std::string merged = left + right.substr(kContinuationPrefix.size());
    for (Word& w : words) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == left && w.symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(next);
    }
    if (known.insert(merged).second) {
      tokens.push_back(merged);
    }
  }
  return Vocab(std::move(tokens));
}

// ---- tokenize --------------------------------------------------------------------

TokenizedText tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 3) {
    throw ContractError("tokenize: max_len must be >= 3, got " + std::to_string(max_len));
  }
  const std::string lower = lowercase(text);
  TokenizedText out;
  out.ids.push_back(kClsId);
  out.spans.push_back({0, 0});
  const std::size_t body_limit = max_len - 1;
  for (const WordSlice& w : split_words(lower)) {
    if (out.ids.size() >= body_limit) break;
    auto pieces = segment_word(std::string_view(lower).substr(w.begin, w.end - w.begin), w.begin, vocab);
    if (pieces.empty()) {
      pieces.emplace_back(kUnkId, CharSpan{w.begin, w.end});
    }
    for (const auto& [id, span] : pieces) {
      if (out.ids.size() >= body_limit) break;
      out.ids.push_back(id);
      out.spans.push_back(span);
    }
  }
  const std::size_t tail = out.spans.back().end;
  out.ids.push_back(kSepId);
  out.spans.push_back({tail, tail});
  return out;
}

std::vector<std::string> token_strings(const TokenizedText& text, const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(text.ids.size());
  for (std::int32_t id : text.ids) out.push_back(vocab.token(id));
  return out;
}

// ---- subword merging ------------------------------------------------------------

std::vector<std::pair<std::string, double>> merge_subwords(const std::vector<std::string>& tokens,
                                                           const std::vector<double>& weights) {
  if (tokens.size() != weights.size()) {
    throw ContractError("merge_subwords: " + std::to_string(tokens.size()) + " tokens vs " +
                        std::to_string(weights.size()) + " weights");
  }
  std::vector<std::pair<std::string, double>> out;
  bool can_extend = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (is_continuation(tok) && can_extend) {
      out.back().first += tok.substr(kContinuationPrefix.size());
      out.back().second = std::max(out.back().second, weights[i]);
      continue;
    }
    out.emplace_back(tok, weights[i]);
    can_extend = !is_special_token(tok);
  }
  return out;
}

std::vector<MergedWord> merge_subword_spans(std::string_view original, const TokenizedText& tokens,
                                            const Vocab& vocab, const std::vector<double>& weights) {
  if (tokens.ids.size() != weights.size() || tokens.ids.size() != tokens.spans.size()) {
    throw ContractError("merge_subword_spans: " + std::to_string(tokens.ids.size()) + " tokens vs " +
                        std::to_string(weights.size()) + " weights");
  }
  std::vector<MergedWord> out;
  bool can_extend = false;
  for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
    const std::int32_t id = tokens.ids[i];
    if (id == kPadId || id == kClsId || id == kSepId) {
      can_extend = false;
      continue;
    }
    const CharSpan span = tokens.spans[i];
    if (can_extend && id != kUnkId && is_continuation(vocab.token(id)) && span.begin == out.back().span.end) {
      MergedWord& w = out.back();
      w.span.end = span.end;
      w.weight = std::max(w.weight, weights[i]);
      w.last_token = i;
    } else {
      out.push_back(MergedWord{{}, weights[i], span, i, i});
    }
    can_extend = id != kUnkId;
  }
  for (MergedWord& w : out) {
    const std::size_t begin = std::min(w.span.begin, original.size());
    const std::size_t end = std::min(w.span.end, original.size());
    w.text = std::string(original.substr(begin, end - begin));
  }
  return out;
}

}  // namespace lame
