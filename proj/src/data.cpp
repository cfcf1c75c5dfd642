#include "lame/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lame/errors.hpp"

namespace lame {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Calls fn(line_number, fields) for every non-comment, non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#' || trim(line).empty()) continue;
    fn(number, split_tabs(line));
  }
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::string single_line(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return out;
}

}  // namespace

// ---- corpus -----------------------------------------------------------------------

void Corpus::validate() const {
  if (labels.empty()) throw InputError("corpus has no labels");
  for (const LabelDef& l : labels) {
    if (trim(l.description).empty()) throw InputError("label '" + l.id + "' has an empty description");
  }
  for (const Instance& inst : instances) {
    if (mode == TaskMode::multi_label) {
      if (inst.labels.size() != labels.size()) {
        throw InputError("instance '" + inst.id + "' has " + std::to_string(inst.labels.size()) +
                         " gold entries for " + std::to_string(labels.size()) + " labels");
      }
      for (double v : inst.labels) {
        if (v != 0.0 && v != 1.0) throw InputError("instance '" + inst.id + "' has a non-binary gold entry");
      }
    } else if (inst.class_index < 0 || static_cast<std::size_t>(inst.class_index) >= labels.size()) {
      throw InputError("instance '" + inst.id + "' has class index " + std::to_string(inst.class_index) +
                       " outside " + std::to_string(labels.size()) + " labels");
    }
  }
}

std::vector<std::string> Corpus::label_ids() const {
  std::vector<std::string> out;
  for (const LabelDef& l : labels) out.push_back(l.id);
  return out;
}

std::vector<std::string> Corpus::descriptions() const {
  std::vector<std::string> out;
  for (const LabelDef& l : labels) out.push_back(l.description);
  return out;
}

CorpusFormat parse_corpus_format(std::string_view text) {
  if (text == "hoc_style" || text == "hoc") return CorpusFormat::hoc_style;
  if (text == "disease5_style" || text == "disease5") return CorpusFormat::disease5_style;
  throw ConfigError("unknown corpus format '" + std::string(text) + "' (expected hoc_style or disease5_style)");
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::hoc_style ? "hoc_style" : "disease5_style";
}

TaskMode task_mode(CorpusFormat format) {
  return format == CorpusFormat::hoc_style ? TaskMode::multi_label : TaskMode::multi_class;
}

std::array<double, 3> default_split_ratio(CorpusFormat format) {
  return format == CorpusFormat::hoc_style ? std::array<double, 3>{7, 1, 2} : std::array<double, 3>{8, 1, 1};
}

std::vector<LabelDef> load_descriptions(const std::filesystem::path& path) {
  std::vector<LabelDef> labels;
  std::unordered_set<std::string> seen;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string>& f) {
    if (f.size() != 3) {
      throw InputError(where(path, line) + "expected 3 tab-separated fields (id, name, description), got " +
                       std::to_string(f.size()));
    }
    LabelDef def{trim(f[0]), trim(f[1]), trim(f[2])};
    if (def.id.empty()) throw InputError(where(path, line) + "empty label id");
    if (def.description.empty()) throw InputError(where(path, line) + "empty description for label '" + def.id + "'");
    if (!seen.insert(def.id).second) throw InputError(where(path, line) + "duplicate label id '" + def.id + "'");
    labels.push_back(std::move(def));
  });
  if (labels.empty()) throw InputError(path.string() + ": no label descriptions");
  return labels;
}

void save_descriptions(const std::vector<LabelDef>& labels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# label_id\tname\tdescription\n";
  for (const LabelDef& l : labels) {
    out << single_line(l.id) << '\t' << single_line(l.name) << '\t' << single_line(l.description) << '\n';
  }
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::filesystem::path& descriptions_path) {
  Corpus corpus;
  corpus.labels = load_descriptions(descriptions_path);
  corpus.mode = task_mode(format);
  std::unordered_map<std::string, std::int32_t> index;
  for (std::size_t i = 0; i < corpus.labels.size(); ++i) {
    index.emplace(corpus.labels[i].id, static_cast<std::int32_t>(i));
  }
  auto lookup = [&](const std::string& id, std::size_t line) {
    auto it = index.find(id);
    if (it == index.end()) throw InputError(where(path, line) + "unknown label id '" + id + "'");
    return it->second;
  };

  std::unordered_set<std::string> ids;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string>& f) {
    Instance inst;
    if (format == CorpusFormat::hoc_style) {
      if (f.size() != 2 && f.size() != 3) {
        throw InputError(where(path, line) + "expected id, text and label fields, got " + std::to_string(f.size()) +
                         " fields");
      }
      inst.id = trim(f[0]);
      inst.text = f[1];
      inst.labels.assign(corpus.labels.size(), 0.0);
      if (f.size() == 3) {
        std::stringstream field(f[2]);
        std::string item;
        while (std::getline(field, item, ',')) {
          item = trim(item);
          if (!item.empty()) inst.labels[static_cast<std::size_t>(lookup(item, line))] = 1.0;
        }
      }
    } else {
      if (f.size() != 2) {
        throw InputError(where(path, line) + "expected class and text fields, got " + std::to_string(f.size()) +
                         " fields");
      }
      inst.id = std::to_string(corpus.instances.size());
      inst.class_index = lookup(trim(f[0]), line);
      inst.text = f[1];
    }
    if (inst.id.empty()) throw InputError(where(path, line) + "empty instance id");
    if (!ids.insert(inst.id).second) throw InputError(where(path, line) + "duplicate instance id '" + inst.id + "'");
    corpus.instances.push_back(std::move(inst));
  });
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const Instance& inst : corpus.instances) {
    if (corpus.mode == TaskMode::multi_label) {
      out << single_line(inst.id) << '\t' << single_line(inst.text) << '\t';
      bool first = true;
      for (std::size_t l = 0; l < inst.labels.size(); ++l) {
        if (inst.labels[l] == 0.0) continue;
        out << (first ? "" : ",") << corpus.labels[l].id;
        first = false;
      }
      out << '\n';
    } else {
      out << corpus.labels.at(static_cast<std::size_t>(inst.class_index)).id << '\t' << single_line(inst.text)
          << '\n';
    }
  }
}

// ---- split -------------------------------------------------------------------------

Split split(std::size_t n, std::array<double, 3> ratio, std::uint64_t seed) {
  if (n < 3) throw InputError("cannot split " + std::to_string(n) + " instances into train/dev/test");
  if (ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0 || !(ratio[0] + ratio[1] + ratio[2] > 0)) {
    throw ConfigError("split ratio entries must be >= 0 with a positive sum");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  const double total = ratio[0] + ratio[1] + ratio[2];
  const auto cut1 = static_cast<std::size_t>(std::floor(ratio[0] / total * static_cast<double>(n)));
  const auto cut2 = static_cast<std::size_t>(std::floor((ratio[0] + ratio[1]) / total * static_cast<double>(n)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut1));
  s.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(cut1), order.begin() + static_cast<std::ptrdiff_t>(cut2));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut2), order.end());
  return s;
}

// ---- metrics ----------------------------------------------------------------------

Prf micro_prf(std::span<const std::vector<int>> preds, std::span<const std::vector<int>> golds) {
  if (preds.size() != golds.size()) {
    throw ContractError("micro_prf: " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(golds.size()) + " gold vectors");
  }
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != golds[i].size()) {
      throw ContractError("micro_prf: instance " + std::to_string(i) + " has " + std::to_string(preds[i].size()) +
                          " predicted vs " + std::to_string(golds[i].size()) + " gold labels");
    }
    for (std::size_t l = 0; l < preds[i].size(); ++l) {
      const bool p = preds[i][l] != 0;
      const bool g = golds[i][l] != 0;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  Prf r;
  r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

double accuracy(std::span<const std::int32_t> preds, std::span<const std::int32_t> golds) {
  if (preds.empty() || preds.size() != golds.size()) {
    throw ContractError("accuracy: need equal, non-empty sequences (" + std::to_string(preds.size()) + " vs " +
                        std::to_string(golds.size()) + ")");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// ---- synthetic corpus -----------------------------------------------------------------

namespace {

std::string random_word(std::mt19937_64& rng, int min_len, int max_len) {
  static constexpr std::string_view kConsonants = "bcdfghklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::uniform_int_distribution<int> length(min_len, max_len);
  std::uniform_int_distribution<std::size_t> consonant(0, kConsonants.size() - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, kVowels.size() - 1);
  const int n = length(rng);
  std::string w;
  for (int i = 0; i < n; ++i) w.push_back(i % 2 == 0 ? kConsonants[consonant(rng)] : kVowels[vowel(rng)]);
  return w;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& o) {
  if (o.num_labels < 1 || o.docs_per_label < 1 || o.vocab_noise_size < 1 || o.keywords_per_label < 1 ||
      o.min_noise_words < 1 || o.max_noise_words < o.min_noise_words || o.max_labels_per_doc < 1) {
    throw ConfigError("synthetic corpus counts must all be >= 1");
  }
  std::mt19937_64 rng(o.seed);
  std::set<std::string> used = {"documents", "about", "and", "mentioning", "topic"};
  auto fresh = [&](int min_len, int max_len) {
    std::string w;
    do {
      w = random_word(rng, min_len, max_len);
    } while (!used.insert(w).second);
    return w;
  };

  SyntheticCorpus out;
  Corpus& corpus = out.corpus;
  corpus.mode = o.multi_label ? TaskMode::multi_label : TaskMode::multi_class;
  out.keywords.resize(static_cast<std::size_t>(o.num_labels));
  for (int l = 0; l < o.num_labels; ++l) {
    auto& kws = out.keywords[static_cast<std::size_t>(l)];
    for (int k = 0; k < o.keywords_per_label; ++k) kws.push_back(fresh(6, 9));
    std::string description = "documents about topic " + std::to_string(l) + " mentioning";
    for (std::size_t k = 0; k < kws.size(); ++k) description += (k == 0 ? " " : " and ") + kws[k];
    corpus.labels.push_back({"L" + std::to_string(l), "topic " + std::to_string(l), description});
  }
  std::vector<std::string> noise;
  for (int i = 0; i < o.vocab_noise_size; ++i) noise.push_back(fresh(3, 5));

  std::uniform_int_distribution<std::size_t> pick_noise(0, noise.size() - 1);
  std::uniform_int_distribution<int> doc_length(o.min_noise_words, o.max_noise_words);
  std::uniform_int_distribution<std::size_t> pick_keyword(0, static_cast<std::size_t>(o.keywords_per_label) - 1);
  std::uniform_int_distribution<int> pick_label(0, o.num_labels - 1);
  std::uniform_int_distribution<int> extra_count(0, std::min(o.max_labels_per_doc, o.num_labels) - 1);

  for (int l = 0; l < o.num_labels; ++l) {
    for (int d = 0; d < o.docs_per_label; ++d) {
      std::vector<int> gold = {l};
      if (o.multi_label) {
        const int extra = extra_count(rng);
        while (static_cast<int>(gold.size()) < 1 + extra) {
          const int candidate = pick_label(rng);
          if (std::find(gold.begin(), gold.end(), candidate) == gold.end()) gold.push_back(candidate);
        }
      }
      std::vector<std::string> words;
      const int length = doc_length(rng);
      for (int i = 0; i < length; ++i) words.push_back(noise[pick_noise(rng)]);
      for (int g : gold) {
        std::uniform_int_distribution<std::size_t> where(0, words.size());
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(where(rng)),
                     out.keywords[static_cast<std::size_t>(g)][pick_keyword(rng)]);
      }
      Instance inst;
      inst.id = std::to_string(corpus.instances.size());
      for (std::size_t i = 0; i < words.size(); ++i) inst.text += (i == 0 ? "" : " ") + words[i];
      if (o.multi_label) {
        inst.labels.assign(static_cast<std::size_t>(o.num_labels), 0.0);
        for (int g : gold) inst.labels[static_cast<std::size_t>(g)] = 1.0;
      } else {
        inst.class_index = l;
      }
      corpus.instances.push_back(std::move(inst));
    }
  }
  corpus.validate();
  return out;
}

}  // namespace lame
