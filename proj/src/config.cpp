#include "lame/config.hpp"

#include <set>

#include "lame/errors.hpp"
#include "lame/hash.hpp"

namespace lame {

std::string_view to_string(TaskMode mode) {
  return mode == TaskMode::multi_class ? "multi_class" : "multi_label";
}

std::string_view to_string(AttentionScale scale) {
  return scale == AttentionScale::per_head ? "per_head" : "full_width";
}

std::string_view to_string(LossKind loss) {
  switch (loss) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::bce: return "bce";
    case LossKind::f_measure: return "f_measure";
  }
  return "?";
}

TaskMode parse_task_mode(std::string_view text) {
  if (text == "multi_class") return TaskMode::multi_class;
  if (text == "multi_label") return TaskMode::multi_label;
  throw ConfigError("unknown task mode '" + std::string(text) + "'");
}

AttentionScale parse_attention_scale(std::string_view text) {
  if (text == "per_head") return AttentionScale::per_head;
  if (text == "full_width") return AttentionScale::full_width;
  throw ConfigError("unknown attention scale '" + std::string(text) + "'");
}

LossKind parse_loss(std::string_view text) {
  if (text == "cross_entropy") return LossKind::cross_entropy;
  if (text == "bce" || text == "binary_cross_entropy") return LossKind::bce;
  if (text == "f_measure") return LossKind::f_measure;
  throw ConfigError("unknown loss '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model.") + name + " must be positive, got " + std::to_string(v));
  };
  positive(hidden, "hidden");
  positive(encoder_layers, "encoder_layers");
  positive(encoder_heads, "encoder_heads");
  positive(label_heads, "label_heads");
  positive(ffn_mult, "ffn_mult");
  positive(max_sequence_length, "max_sequence_length");
  positive(vocab_size, "vocab_size");
  positive(num_labels, "num_labels");
  positive(label_attention_blocks, "label_attention_blocks");
  if (hidden < 2) throw ConfigError("model.hidden must be >= 2 for layer normalization");
  if (hidden % encoder_heads != 0) {
    throw ConfigError("model.hidden (" + std::to_string(hidden) + ") is not divisible by encoder_heads (" +
                      std::to_string(encoder_heads) + ")");
  }
  if (hidden % label_heads != 0) {
    throw ConfigError("model.hidden (" + std::to_string(hidden) + ") is not divisible by label_heads (" +
                      std::to_string(label_heads) + ")");
  }
  if (max_sequence_length < 3) throw ConfigError("model.max_sequence_length must be >= 3");
  if (vocab_size < 5) throw ConfigError("model.vocab_size must exceed the 4 special tokens");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must lie in [0, 1)");
  if (!(layer_norm_eps >= 0.0)) throw ConfigError("model.layer_norm_eps must be >= 0");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ConfigError("model.decision_threshold must lie in (0, 1)");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(warm_up_fraction > 0.0 && warm_up_fraction < 1.0)) {
    throw ConfigError("train.warm_up_fraction must lie in (0, 1)");
  }
  if (!(lr_encoder_max > 0.0) || !(lr_label_attention_max > 0.0) || !(lr_head_constant > 0.0)) {
    throw ConfigError("train learning rates must be positive");
  }
  if (!(stlr_ratio >= 1.0)) throw ConfigError("train.stlr_ratio must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(init_std > 0.0)) throw ConfigError("train.init_std must be positive");
  if (!(f_measure_eps >= 0.0)) throw ConfigError("train.f_measure_eps must be >= 0");
}

LossKind TrainConfig::resolved_loss(TaskMode mode) const {
  if (loss) return *loss;
  return mode == TaskMode::multi_class ? LossKind::cross_entropy : LossKind::f_measure;
}

void check_loss_compatible(TaskMode mode, LossKind loss) {
  const bool ok = mode == TaskMode::multi_class ? loss == LossKind::cross_entropy : loss != LossKind::cross_entropy;
  if (!ok) {
    throw ConfigError("loss '" + std::string(to_string(loss)) + "' cannot train a " +
                      std::string(to_string(mode)) + " task");
  }
}

// ---- JSON ----------------------------------------------------------------------

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError(std::string("unknown ") + section + " config key '" + key + "'");
    }
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

}  // namespace

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"hidden", c.hidden},
                     {"encoder_layers", c.encoder_layers},
                     {"encoder_heads", c.encoder_heads},
                     {"label_heads", c.label_heads},
                     {"ffn_mult", c.ffn_mult},
                     {"max_sequence_length", c.max_sequence_length},
                     {"vocab_size", c.vocab_size},
                     {"num_labels", c.num_labels},
                     {"label_attention_blocks", c.label_attention_blocks},
                     {"mode", to_string(c.mode)},
                     {"attention_scale", to_string(c.attention_scale)},
                     {"dropout", c.dropout},
                     {"layer_norm_eps", c.layer_norm_eps},
                     {"decision_threshold", c.decision_threshold}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  reject_unknown(j,
                 {"hidden", "encoder_layers", "encoder_heads", "label_heads", "ffn_mult", "max_sequence_length",
                  "vocab_size", "num_labels", "label_attention_blocks", "mode", "attention_scale", "dropout",
                  "layer_norm_eps", "decision_threshold"},
                 "model");
  read(j, "hidden", c.hidden);
  read(j, "encoder_layers", c.encoder_layers);
  read(j, "encoder_heads", c.encoder_heads);
  read(j, "label_heads", c.label_heads);
  read(j, "ffn_mult", c.ffn_mult);
  read(j, "max_sequence_length", c.max_sequence_length);
  read(j, "vocab_size", c.vocab_size);
  read(j, "num_labels", c.num_labels);
  read(j, "label_attention_blocks", c.label_attention_blocks);
  std::string text;
  if (j.contains("mode")) {
    read(j, "mode", text);
    c.mode = parse_task_mode(text);
  }
  if (j.contains("attention_scale")) {
    read(j, "attention_scale", text);
    c.attention_scale = parse_attention_scale(text);
  }
  read(j, "dropout", c.dropout);
  read(j, "layer_norm_eps", c.layer_norm_eps);
  read(j, "decision_threshold", c.decision_threshold);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"warm_up_fraction", c.warm_up_fraction},
                     {"lr_encoder_max", c.lr_encoder_max},
                     {"lr_label_attention_max", c.lr_label_attention_max},
                     {"lr_head_constant", c.lr_head_constant},
                     {"stlr_ratio", c.stlr_ratio},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_eps", c.adam_eps},
                     {"weight_decay", c.weight_decay},
                     {"init_std", c.init_std},
                     {"f_measure_eps", c.f_measure_eps},
                     {"seed", c.seed},
                     {"freeze_encoder", c.freeze_encoder}};
  j["loss"] = c.loss ? nlohmann::json(to_string(*c.loss)) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"epochs", "batch_size", "warm_up_fraction", "lr_encoder_max", "lr_label_attention_max",
                  "lr_head_constant", "stlr_ratio", "beta1", "beta2", "adam_eps", "weight_decay", "init_std",
                  "f_measure_eps", "seed", "loss", "freeze_encoder"},
                 "train");
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "warm_up_fraction", c.warm_up_fraction);
  read(j, "lr_encoder_max", c.lr_encoder_max);
  read(j, "lr_label_attention_max", c.lr_label_attention_max);
  read(j, "lr_head_constant", c.lr_head_constant);
  read(j, "stlr_ratio", c.stlr_ratio);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "weight_decay", c.weight_decay);
  read(j, "init_std", c.init_std);
  read(j, "f_measure_eps", c.f_measure_eps);
  read(j, "seed", c.seed);
  read(j, "freeze_encoder", c.freeze_encoder);
  if (auto it = j.find("loss"); it != j.end()) {
    if (it->is_null()) {
      c.loss.reset();
    } else if (it->is_string()) {
      c.loss = parse_loss(it->get<std::string>());
    } else {
      throw ConfigError("config key 'loss' must be a string or null");
    }
  }
}

std::uint64_t config_hash(const ModelConfig& c) {
  return fnv1a(nlohmann::json(c).dump());
}

}  // namespace lame
