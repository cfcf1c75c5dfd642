#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace lame {

enum class TaskMode { multi_class, multi_label };
enum class AttentionScale { per_head, full_width };
enum class LossKind { cross_entropy, bce, f_measure };

std::string_view to_string(TaskMode mode);
std::string_view to_string(AttentionScale scale);
std::string_view to_string(LossKind loss);
TaskMode parse_task_mode(std::string_view text);
AttentionScale parse_attention_scale(std::string_view text);
LossKind parse_loss(std::string_view text);

// Architecture hyperparameters. Defaults are the desk-scale geometry.
struct ModelConfig {
  int hidden = 64;
  int encoder_layers = 2;
  int encoder_heads = 4;
  int label_heads = 4;
  int ffn_mult = 4;
  int max_sequence_length = 128;
  int vocab_size = 0;
  int num_labels = 0;
  int label_attention_blocks = 1;
  TaskMode mode = TaskMode::multi_label;
  AttentionScale attention_scale = AttentionScale::per_head;
  double dropout = 0.0;
  double layer_norm_eps = 1e-12;
  double decision_threshold = 0.5;

  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 42;
  double warm_up_fraction = 0.1;
  double lr_encoder_max = 5e-05;
  double lr_label_attention_max = 4e-02;
  double lr_head_constant = 1e-03;
  double stlr_ratio = 32.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double init_std = 0.02;
  double f_measure_eps = 1e-8;
  std::uint64_t seed = 0;
  // Unset means the task default: cross_entropy (multi_class), f_measure (multi_label).
  std::optional<LossKind> loss;
  bool freeze_encoder = false;

  void validate() const;
  LossKind resolved_loss(TaskMode mode) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws ConfigError when `loss` cannot train a model in `mode`.
void check_loss_compatible(TaskMode mode, LossKind loss);

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Fingerprint of the canonical JSON form.
std::uint64_t config_hash(const ModelConfig& c);

}  // namespace lame
