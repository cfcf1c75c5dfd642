#include "lame/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "lame/errors.hpp"

namespace lame {

double stlr(std::size_t step, std::size_t total_steps, double lr_max, double cut_frac, double ratio) {
  if (total_steps < 1) throw ConfigError("stlr: total_steps must be >= 1");
  if (step > total_steps) {
    throw ContractError("stlr: step " + std::to_string(step) + " beyond total_steps " + std::to_string(total_steps));
  }
  const auto cut = static_cast<std::size_t>(std::floor(cut_frac * static_cast<double>(total_steps)));
  if (cut == 0) {
    throw ConfigError("stlr: warm-up fraction " + std::to_string(cut_frac) + " of " + std::to_string(total_steps) +
                      " steps leaves no warm-up step");
  }
  const double s = static_cast<double>(step);
  const double c = static_cast<double>(cut);
  double p = step < cut ? s / c : 1.0 - (s - c) / (c * (1.0 / cut_frac - 1.0));
  p = std::clamp(p, 0.0, 1.0);
  return lr_max * (1.0 + p * (ratio - 1.0)) / ratio;
}

void adamw_step(Matrix& param, const Matrix& grad, AdamState& state, double lr, const AdamWHyper& hyper) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw DimensionError("adamw_step: gradient " + shape_string(grad.rows(), grad.cols()) + " vs parameter " +
                         shape_string(param.rows(), param.cols()));
  }
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  } else if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    throw DimensionError("adamw_step: optimizer state " + shape_string(state.m.rows(), state.m.cols()) +
                         " vs parameter " + shape_string(param.rows(), param.cols()));
  }
  state.t += 1;
  state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
  state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(state.t);
  const double m_corr = 1.0 - std::pow(hyper.beta1, t);
  const double v_corr = 1.0 - std::pow(hyper.beta2, t);
  const auto m_hat = state.m.array() / m_corr;
  const auto v_hat = state.v.array() / v_corr;
  param.array() -= lr * (m_hat / (v_hat.sqrt() + hyper.eps) + hyper.weight_decay * param.array());
}

std::vector<Example> make_examples(const Corpus& corpus, std::span<const std::size_t> indices, const Vocab& vocab,
                                   std::size_t max_len) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const Instance& inst = corpus.instances.at(i);
    out.push_back({inst.id, tokenize(inst.text, vocab, max_len), inst.labels, inst.class_index});
  }
  return out;
}

std::vector<TokenizedText> tokenize_descriptions(const Corpus& corpus, const Vocab& vocab, std::size_t max_len) {
  std::vector<TokenizedText> out;
  for (const LabelDef& l : corpus.labels) out.push_back(tokenize(l.description, vocab, max_len));
  return out;
}

EvalResult evaluate(const LameModel& model, const std::vector<TokenizedText>& descriptions,
                    std::span<const Example> examples, unsigned jobs) {
  const Predictor predictor(model, descriptions);
  EvalResult result;
  result.predictions.resize(examples.size());
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < examples.size(); i += stride) {
      result.predictions[i] = predictor.predict(examples[i].tokens);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(examples.size(), 1))));
  if (jobs == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> workers;
    for (unsigned j = 0; j < jobs; ++j) workers.emplace_back(run, j, jobs);
    for (std::thread& w : workers) w.join();
  }
  if (examples.empty()) return result;

  const ModelConfig& config = model.config();
  if (config.mode == TaskMode::multi_label) {
    std::vector<std::vector<int>> preds, golds;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      std::vector<int> p(static_cast<std::size_t>(config.num_labels), 0);
      for (std::size_t l : result.predictions[i].predicted) p[l] = 1;
      preds.push_back(std::move(p));
      std::vector<int> g;
      for (double v : examples[i].labels) g.push_back(v != 0.0);
      golds.push_back(std::move(g));
    }
    result.prf = micro_prf(preds, golds);
  } else {
    std::vector<std::int32_t> preds, golds;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      preds.push_back(static_cast<std::int32_t>(result.predictions[i].predicted.front()));
      golds.push_back(examples[i].class_index);
    }
    result.accuracy = accuracy(preds, golds);
  }
  return result;
}

std::string TrainingReport::to_jsonl() const {
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  std::string out;
  for (const EpochRecord& e : epochs) {
    nlohmann::json line{{"epoch", e.epoch},
                        {"step", e.step},
                        {"lr",
                         {{"encoder", e.lr[0]}, {"label_attention", e.lr[1]}, {"head", e.lr[2]}}},
                        {"train_loss", number(e.train_loss)}};
    if (e.dev) {
      if (mode == TaskMode::multi_label) {
        line["dev"] = {{"micro_f1", e.dev->prf.f1}, {"precision", e.dev->prf.precision}, {"recall", e.dev->prf.recall}};
      } else {
        line["dev"] = {{"accuracy", e.dev->accuracy}};
      }
    } else {
      line["dev"] = nullptr;
    }
    out += line.dump() + "\n";
  }
  nlohmann::json summary{{"summary",
                          {{"mode", to_string(mode)},
                           {"loss", to_string(loss)},
                           {"total_steps", total_steps},
                           {"best_epoch", best_epoch},
                           {"best_dev_metric", number(best_dev_metric)}}}};
  out += summary.dump() + "\n";
  return out;
}

void freeze_encoder(LameModel& model) { model.freeze_encoder(); }

namespace {

constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

TrainingResult train(LameModel& model, const TrainingData& data, const TrainConfig& config,
                     const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  const ModelConfig& mc = model.config();
  const LossKind loss_kind = config.resolved_loss(mc.mode);
  check_loss_compatible(mc.mode, loss_kind);
  if (data.train.empty()) throw InputError("training split is empty");
  if (data.descriptions.size() != static_cast<std::size_t>(mc.num_labels)) {
    throw ContractError("train: " + std::to_string(data.descriptions.size()) + " label descriptions for " +
                        std::to_string(mc.num_labels) + " labels");
  }

  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (data.train.size() + batch_size - 1) / batch_size;
  const std::size_t total_steps = static_cast<std::size_t>(config.epochs) * steps_per_epoch;
  // Fail early rather than after the first epoch.
  stlr(0, total_steps, 1.0, config.warm_up_fraction, config.stlr_ratio);

  if (config.freeze_encoder) model.freeze_encoder();
  const bool encoder_trainable = !model.encoder_frozen();
  const AdamWHyper hyper{config.beta1, config.beta2, config.adam_eps, config.weight_decay};
  OptimizerState optimizer;
  std::mt19937_64 shuffle_rng(config.seed ^ kShuffleSalt);
  std::mt19937_64 dropout_rng(config.seed);

  TrainingResult result{TrainingReport{mc.mode, loss_kind, total_steps, {}, 0, -std::numeric_limits<double>::infinity()},
                        model};
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  std::array<double, 3> lr = {0, 0, 0};

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(shuffle_rng)]);
    }
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      Tape tape;
      ForwardContext ctx{tape, Mode::train, &dropout_rng, {encoder_trainable, true, true}, mc.dropout};
      const Tensor labels = build_label_matrix(ctx, data.descriptions, data.label_order, model.encoder, mc).embeddings;

      std::vector<Prediction> preds;
      std::vector<std::vector<double>> golds;
      std::vector<Tensor> losses;
      for (std::size_t k = begin; k < end; ++k) {
        const Example& ex = data.train[order[k]];
        Prediction pred = forward_document(ctx, model, labels, ex.tokens).prediction;
        if (loss_kind == LossKind::cross_entropy) {
          losses.push_back(cross_entropy(pred, ex.class_index));
        } else if (loss_kind == LossKind::bce) {
          losses.push_back(binary_cross_entropy(pred, ex.labels));
        } else {
          preds.push_back(pred);
          golds.push_back(ex.labels);
        }
      }
      Tensor loss;
      if (loss_kind == LossKind::f_measure) {
        loss = f_measure_loss(preds, golds, config.f_measure_eps);
      } else {
        loss = scale(sum(concat_rows(losses)), 1.0 / static_cast<double>(losses.size()));
      }
      tape.backward(loss);
      loss_sum += loss.item();

      lr = {stlr(step, total_steps, config.lr_encoder_max, config.warm_up_fraction, config.stlr_ratio),
            stlr(step, total_steps, config.lr_label_attention_max, config.warm_up_fraction, config.stlr_ratio),
            config.lr_head_constant};
      for (ParameterRef& ref : model.parameters()) {
        ref.param->zero_grad();
        if (ref.group == ParamGroup::encoder && !encoder_trainable) continue;
        if (const Matrix* g = tape.find_gradient(*ref.param)) ref.param->grad += *g;
        adamw_step(ref.param->value, ref.param->grad, optimizer[ref.param->name],
                   lr[static_cast<std::size_t>(ref.group)], hyper);
      }
      ++step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.step = step;
    record.lr = lr;
    record.train_loss = loss_sum / static_cast<double>(steps_per_epoch);
    double metric = std::numeric_limits<double>::quiet_NaN();
    if (!data.dev.empty()) {
      EvalResult dev = evaluate(model, data.descriptions, data.dev);
      dev.predictions.clear();
      metric = dev.headline(mc.mode);
      record.dev = std::move(dev);
    }
    // Without a dev split the latest epoch counts as best.
    if (data.dev.empty() || metric > result.report.best_dev_metric) {
      result.report.best_epoch = epoch;
      result.report.best_dev_metric = metric;
      result.best_model = model;
    }
    result.report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace lame
