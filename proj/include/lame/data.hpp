#pragma once

// Corpora, label descriptions, splits, metrics and the synthetic keyword corpus.
//
// File formats (UTF-8, tab-separated, lines starting with '#' ignored):
//   descriptions   label_id <TAB> name <TAB> description
//   hoc_style      instance_id <TAB> text <TAB> label_id[,label_id...]   (field may be empty)
//   disease5_style label_id <TAB> text

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lame/config.hpp"

namespace lame {

struct LabelDef {
  std::string id;
  std::string name;
  std::string description;

  friend bool operator==(const LabelDef&, const LabelDef&) = default;
};

struct Instance {
  std::string id;
  std::string text;
  // multi_label: one 0/1 entry per label. multi_class: empty.
  std::vector<double> labels;
  // multi_class: gold index into Corpus::labels. multi_label: -1.
  std::int32_t class_index = -1;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Corpus {
  std::vector<Instance> instances;
  std::vector<LabelDef> labels;
  TaskMode mode = TaskMode::multi_label;

  // Throws InputError on inconsistent gold data or empty descriptions.
  void validate() const;
  std::vector<std::string> label_ids() const;
  std::vector<std::string> descriptions() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class CorpusFormat { hoc_style, disease5_style };

CorpusFormat parse_corpus_format(std::string_view text);
std::string_view to_string(CorpusFormat format);
TaskMode task_mode(CorpusFormat format);
// Default train:dev:test ratio for the format (7:1:2 and 8:1:1).
std::array<double, 3> default_split_ratio(CorpusFormat format);

std::vector<LabelDef> load_descriptions(const std::filesystem::path& path);
void save_descriptions(const std::vector<LabelDef>& labels, const std::filesystem::path& path);

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::filesystem::path& descriptions_path);
// Writes the instances in the format matching corpus.mode.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;

  friend bool operator==(const Split&, const Split&) = default;
};

// Seeded shuffle, then contiguous cuts at floor(a/(a+b+c) n) and floor((a+b)/(a+b+c) n).
Split split(std::size_t n, std::array<double, 3> ratio, std::uint64_t seed);
inline Split split(const Corpus& corpus, std::array<double, 3> ratio, std::uint64_t seed) {
  return split(corpus.instances.size(), ratio, seed);
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Hard counts pooled over all (instance, label) pairs; 0/0 is 0.
Prf micro_prf(std::span<const std::vector<int>> preds, std::span<const std::vector<int>> golds);
double accuracy(std::span<const std::int32_t> preds, std::span<const std::int32_t> golds);

struct SyntheticOptions {
  int num_labels = 5;
  int docs_per_label = 40;
  int vocab_noise_size = 200;
  int keywords_per_label = 1;
  bool multi_label = false;
  std::uint64_t seed = 0;
  int min_noise_words = 8;
  int max_noise_words = 16;
  // multi_label only: each document carries 1..max_labels_per_doc labels.
  int max_labels_per_doc = 3;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<std::vector<std::string>> keywords;  // per label
};

// Documents are noise words with one planted keyword per gold label; every
// label's description mentions all of its keywords.
SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options);

}  // namespace lame
