#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lame/config.hpp"
#include "lame/data.hpp"
#include "lame/model.hpp"

namespace lame {

// Slanted triangular schedule: linear warm-up over the first cut_frac of the
// steps from lr_max/ratio to lr_max, then linear decay back to lr_max/ratio.
// Throws ConfigError when floor(cut_frac * total_steps) == 0.
double stlr(std::size_t step, std::size_t total_steps, double lr_max, double cut_frac, double ratio);

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;
};

// One AdamW update with bias correction; decay is decoupled and scaled by lr:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
void adamw_step(Matrix& param, const Matrix& grad, AdamState& state, double lr, const AdamWHyper& hyper);

// Moments per parameter name.
using OptimizerState = std::map<std::string, AdamState>;

struct Example {
  std::string id;
  TokenizedText tokens;
  std::vector<double> labels;     // multi_label gold
  std::int32_t class_index = -1;  // multi_class gold
};

struct TrainingData {
  std::vector<TokenizedText> descriptions;
  std::vector<std::string> label_order;
  std::vector<Example> train;
  std::vector<Example> dev;
};

// Tokenizes the instances selected by `indices`.
std::vector<Example> make_examples(const Corpus& corpus, std::span<const std::size_t> indices, const Vocab& vocab,
                                   std::size_t max_len);
std::vector<TokenizedText> tokenize_descriptions(const Corpus& corpus, const Vocab& vocab, std::size_t max_len);

struct EvalResult {
  Prf prf;                // multi_label
  double accuracy = 0.0;  // multi_class
  std::vector<DocumentPrediction> predictions;

  // micro F1 (multi_label) or accuracy (multi_class)
  double headline(TaskMode mode) const { return mode == TaskMode::multi_label ? prf.f1 : accuracy; }
};

// Eval-mode metrics. jobs > 1 fans documents out over threads; results keep input order.
EvalResult evaluate(const LameModel& model, const std::vector<TokenizedText>& descriptions,
                    std::span<const Example> examples, unsigned jobs = 1);

struct EpochRecord {
  int epoch = 0;
  std::size_t step = 0;  // optimizer steps taken so far
  std::array<double, 3> lr = {0, 0, 0};  // last applied, per ParamGroup
  double train_loss = 0.0;
  std::optional<EvalResult> dev;  // predictions dropped
};

struct TrainingReport {
  TaskMode mode = TaskMode::multi_label;
  LossKind loss = LossKind::f_measure;
  std::size_t total_steps = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_metric = 0.0;

  // One JSON object per epoch, then a summary line.
  std::string to_jsonl() const;
};

struct TrainingResult {
  TrainingReport report;
  LameModel best_model;
};

// Excludes encoder parameters from optimization; label embeddings are still
// recomputed each step, forward-only.
void freeze_encoder(LameModel& model);

TrainingResult train(LameModel& model, const TrainingData& data, const TrainConfig& config,
                     const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace lame
