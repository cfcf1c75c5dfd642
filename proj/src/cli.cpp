#include "lame/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lame/checkpoint.hpp"
#include "lame/data.hpp"
#include "lame/errors.hpp"
#include "lame/explain.hpp"
#include "lame/hash.hpp"
#include "lame/training.hpp"

namespace lame {

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"model", c.model},
       {"train", c.train},
       {"paths",
        {{"corpus", c.paths.corpus},
         {"format", c.paths.format},
         {"descriptions", c.paths.descriptions},
         {"vocab", c.paths.vocab},
         {"checkpoint", c.paths.checkpoint},
         {"output_dir", c.paths.output_dir}}},
       {"vocab_target_size", c.vocab_target_size},
       {"vocab_min_frequency", c.vocab_min_frequency},
       {"split_seed", c.split_seed}};
  j["split_ratio"] = c.split_ratio ? nlohmann::json(*c.split_ratio) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::vector<std::string> known = {"model", "train", "paths", "vocab_target_size",
                                                 "vocab_min_frequency", "split_ratio", "split_seed"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown run config key '" + key + "'");
    }
  }
  try {
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      for (const auto& [key, value] : p.items()) {
        std::string* field = key == "corpus"         ? &c.paths.corpus
                             : key == "format"       ? &c.paths.format
                             : key == "descriptions" ? &c.paths.descriptions
                             : key == "vocab"        ? &c.paths.vocab
                             : key == "checkpoint"   ? &c.paths.checkpoint
                             : key == "output_dir"   ? &c.paths.output_dir
                                                     : nullptr;
        if (!field) throw ConfigError("unknown paths config key '" + key + "'");
        *field = value.get<std::string>();
      }
    }
    if (j.contains("vocab_target_size")) c.vocab_target_size = j.at("vocab_target_size").get<int>();
    if (j.contains("vocab_min_frequency")) c.vocab_min_frequency = j.at("vocab_min_frequency").get<int>();
    if (j.contains("split_seed")) c.split_seed = j.at("split_seed").get<std::uint64_t>();
    if (j.contains("split_ratio")) {
      if (j.at("split_ratio").is_null()) {
        c.split_ratio.reset();
      } else {
        c.split_ratio = j.at("split_ratio").get<std::array<double, 3>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j.get<RunConfig>();
}

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!std::filesystem::is_regular_file(path)) throw InputError(std::string(what) + " not found: " + path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

// Every document in a file, one per line, or a single inline text.
std::vector<std::pair<std::string, std::string>> read_documents(const std::string& input, const std::string& text) {
  std::vector<std::pair<std::string, std::string>> docs;
  if (!text.empty()) {
    docs.emplace_back("0", text);
    return docs;
  }
  if (input.empty()) throw ConfigError("either --text or --input is required");
  std::ifstream in(input);
  if (!in) throw InputError("cannot open input " + input);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    docs.emplace_back(std::to_string(docs.size()), line);
  }
  if (docs.empty()) throw InputError("input " + input + " holds no documents");
  return docs;
}

struct LoadedModel {
  Checkpoint checkpoint;
  Vocab vocab;
  std::string checkpoint_hash;
  std::vector<TokenizedText> descriptions;
};

LoadedModel load_model(const std::string& checkpoint_path, const std::string& vocab_path) {
  require_file(checkpoint_path, "checkpoint");
  require_file(vocab_path, "vocab");
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Vocab vocab = Vocab::load(vocab_path);
  require_vocab(ckpt, vocab.hash());
  const auto max_len = static_cast<std::size_t>(ckpt.model.config().max_sequence_length);
  std::vector<TokenizedText> descriptions;
  for (const LabelDef& l : ckpt.labels) descriptions.push_back(tokenize(l.description, vocab, max_len));
  std::string hash = hex_digest(file_hash(checkpoint_path));
  return {std::move(ckpt), std::move(vocab), std::move(hash), std::move(descriptions)};
}

struct CorpusSplit {
  Corpus corpus;
  Split split;
  std::array<double, 3> ratio;
};

CorpusSplit load_split(const RunConfig& cfg) {
  require_file(cfg.paths.corpus, "corpus");
  require_file(cfg.paths.descriptions, "descriptions");
  const CorpusFormat format = parse_corpus_format(cfg.paths.format);
  Corpus corpus = load_corpus(cfg.paths.corpus, format, cfg.paths.descriptions);
  const auto ratio = cfg.split_ratio.value_or(default_split_ratio(format));
  Split s = split(corpus, ratio, cfg.split_seed);
  return {std::move(corpus), std::move(s), ratio};
}

void add_config_flags(CLI::App& cmd, std::string& config_path) {
  cmd.add_option("--config", config_path, "JSON run config; flags override its fields");
}

RunConfig base_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : load_run_config(config_path);
}

template <typename T>
void apply_flag(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

struct TrainFlags {
  std::string config;
  std::optional<std::string> corpus, format, descriptions, vocab, output_dir, loss;
  std::optional<int> epochs, batch_size, hidden, encoder_layers, encoder_heads, label_heads, label_blocks, max_len;
  std::optional<double> warm_up, lr_encoder, lr_label_attention, lr_head, weight_decay, dropout, init_std;
  std::optional<std::uint64_t> seed, split_seed;
  bool freeze_encoder = false;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
  RunConfig cfg = base_config(f.config);
  apply_flag(f.corpus, cfg.paths.corpus);
  apply_flag(f.format, cfg.paths.format);
  apply_flag(f.descriptions, cfg.paths.descriptions);
  apply_flag(f.vocab, cfg.paths.vocab);
  apply_flag(f.output_dir, cfg.paths.output_dir);
  apply_flag(f.epochs, cfg.train.epochs);
  apply_flag(f.batch_size, cfg.train.batch_size);
  apply_flag(f.hidden, cfg.model.hidden);
  apply_flag(f.encoder_layers, cfg.model.encoder_layers);
  apply_flag(f.encoder_heads, cfg.model.encoder_heads);
  apply_flag(f.label_heads, cfg.model.label_heads);
  apply_flag(f.label_blocks, cfg.model.label_attention_blocks);
  apply_flag(f.max_len, cfg.model.max_sequence_length);
  apply_flag(f.warm_up, cfg.train.warm_up_fraction);
  apply_flag(f.lr_encoder, cfg.train.lr_encoder_max);
  apply_flag(f.lr_label_attention, cfg.train.lr_label_attention_max);
  apply_flag(f.lr_head, cfg.train.lr_head_constant);
  apply_flag(f.weight_decay, cfg.train.weight_decay);
  apply_flag(f.dropout, cfg.model.dropout);
  apply_flag(f.init_std, cfg.train.init_std);
  apply_flag(f.seed, cfg.train.seed);
  apply_flag(f.split_seed, cfg.split_seed);
  if (f.loss) cfg.train.loss = parse_loss(*f.loss);
  if (f.freeze_encoder) cfg.train.freeze_encoder = true;

  cfg.model.mode = task_mode(parse_corpus_format(cfg.paths.format));
  if (cfg.train.loss) check_loss_compatible(cfg.model.mode, *cfg.train.loss);
  cfg.train.validate();
  require_file(cfg.paths.vocab, "vocab");
  if (cfg.paths.output_dir.empty()) throw ConfigError("missing output_dir path");

  CorpusSplit data = load_split(cfg);
  const Vocab vocab = Vocab::load(cfg.paths.vocab);
  cfg.model.vocab_size = static_cast<int>(vocab.size());
  cfg.model.num_labels = static_cast<int>(data.corpus.labels.size());
  cfg.model.validate();
  cfg.split_ratio = data.ratio;

  const auto max_len = static_cast<std::size_t>(cfg.model.max_sequence_length);
  TrainingData td;
  td.descriptions = tokenize_descriptions(data.corpus, vocab, max_len);
  td.label_order = data.corpus.label_ids();
  td.train = make_examples(data.corpus, data.split.train, vocab, max_len);
  td.dev = make_examples(data.corpus, data.split.dev, vocab, max_len);

  const std::filesystem::path dir = cfg.paths.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "run_config.json", nlohmann::json(cfg).dump(2) + "\n");

  LameModel model(cfg.model, cfg.train.seed, cfg.train.init_std);
  out << "training " << td.train.size() << " documents, " << td.dev.size() << " dev, "
      << model.parameter_count() << " parameters, loss "
      << to_string(cfg.train.resolved_loss(cfg.model.mode))
      << (cfg.train.freeze_encoder ? ", encoder frozen" : "") << '\n';
  TrainingResult result = train(model, td, cfg.train, [&](const EpochRecord& e) {
    out << "epoch " << e.epoch << " loss " << e.train_loss;
    if (e.dev) {
      if (cfg.model.mode == TaskMode::multi_label) {
        out << " dev micro_f1 " << e.dev->prf.f1 << " P " << e.dev->prf.precision << " R " << e.dev->prf.recall;
      } else {
        out << " dev accuracy " << e.dev->accuracy;
      }
    }
    out << '\n';
  });

  const std::string report = result.report.to_jsonl();
  write_text(dir / "report.jsonl", report);
  nlohmann::json meta{{"config_hash", hex_digest(config_hash(cfg.model))},
                      {"corpus_hash", hex_digest(file_hash(cfg.paths.corpus))},
                      {"format", cfg.paths.format},
                      {"split_ratio", data.ratio},
                      {"split_seed", cfg.split_seed},
                      {"train_seed", cfg.train.seed},
                      {"report_hash", hex_digest(fnv1a(report))}};
  meta["epoch"] = result.report.best_epoch;
  save_checkpoint(dir / "best.ckpt", result.best_model, data.corpus.labels, vocab.hash(), meta);
  meta["epoch"] = cfg.train.epochs;
  save_checkpoint(dir / "final.ckpt", model, data.corpus.labels, vocab.hash(), meta);
  out << "best epoch " << result.report.best_epoch << " dev " << result.report.best_dev_metric << '\n'
      << "wrote " << (dir / "best.ckpt").string() << '\n';
  return 0;
}

struct EvalFlags {
  std::string config;
  std::optional<std::string> checkpoint, corpus, format, descriptions, vocab;
  std::string which = "test";
  std::string metrics_out, predictions_out;
  std::optional<std::uint64_t> split_seed, seed;
  unsigned jobs = 1;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  RunConfig cfg = base_config(f.config);
  apply_flag(f.checkpoint, cfg.paths.checkpoint);
  apply_flag(f.corpus, cfg.paths.corpus);
  apply_flag(f.descriptions, cfg.paths.descriptions);
  apply_flag(f.vocab, cfg.paths.vocab);
  LoadedModel lm = load_model(cfg.paths.checkpoint, cfg.paths.vocab);
  const nlohmann::json& meta = lm.checkpoint.metadata;
  // The split is recovered from the checkpoint unless overridden.
  if (!f.format && meta.contains("format")) cfg.paths.format = meta["format"].get<std::string>();
  apply_flag(f.format, cfg.paths.format);
  if (!f.split_seed && meta.contains("split_seed")) cfg.split_seed = meta["split_seed"].get<std::uint64_t>();
  apply_flag(f.split_seed, cfg.split_seed);
  if (!cfg.split_ratio && meta.contains("split_ratio")) cfg.split_ratio = meta["split_ratio"].get<std::array<double, 3>>();

  CorpusSplit data = load_split(cfg);
  const ModelConfig& mc = lm.checkpoint.model.config();
  if (data.corpus.mode != mc.mode) {
    throw CompatibilityError("corpus is " + std::string(to_string(data.corpus.mode)) + " but the checkpoint is " +
                             std::string(to_string(mc.mode)));
  }
  if (data.corpus.labels != lm.checkpoint.labels) {
    throw CompatibilityError("label descriptions differ from the ones stored in the checkpoint");
  }
  std::vector<std::size_t> indices;
  if (f.which == "train") indices = data.split.train;
  else if (f.which == "dev") indices = data.split.dev;
  else if (f.which == "test") indices = data.split.test;
  else if (f.which == "all") {
    indices.resize(data.corpus.instances.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  } else {
    throw ConfigError("unknown split '" + f.which + "' (train, dev, test, all)");
  }
  if (indices.empty()) throw InputError("split '" + f.which + "' is empty");
  const auto examples =
      make_examples(data.corpus, indices, lm.vocab, static_cast<std::size_t>(mc.max_sequence_length));
  const EvalResult r = evaluate(lm.checkpoint.model, lm.descriptions, examples, f.jobs);

  nlohmann::json metrics{{"split", f.which},
                         {"documents", examples.size()},
                         {"mode", to_string(mc.mode)},
                         {"config_hash", hex_digest(config_hash(mc))},
                         {"checkpoint_hash", lm.checkpoint_hash}};
  if (mc.mode == TaskMode::multi_label) {
    metrics["micro_precision"] = r.prf.precision;
    metrics["micro_recall"] = r.prf.recall;
    metrics["micro_f1"] = r.prf.f1;
    out << "micro P " << r.prf.precision << " R " << r.prf.recall << " F1 " << r.prf.f1 << '\n';
  } else {
    metrics["accuracy"] = r.accuracy;
    out << "accuracy " << r.accuracy << '\n';
  }
  if (!f.metrics_out.empty()) write_text(f.metrics_out, metrics.dump(2) + "\n");
  if (!f.predictions_out.empty()) {
    std::string dump;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const DocumentPrediction& p = r.predictions[i];
      nlohmann::json line{{"id", examples[i].id},
                          {"predicted", p.predicted},
                          {"probabilities", std::vector<double>(p.probabilities.data(),
                                                                p.probabilities.data() + p.probabilities.size())}};
      if (mc.mode == TaskMode::multi_label) {
        line["gold"] = examples[i].labels;
      } else {
        line["gold"] = examples[i].class_index;
      }
      dump += line.dump() + "\n";
    }
    write_text(f.predictions_out, dump);
  }
  return 0;
}

struct InferFlags {
  std::string config;
  std::optional<std::string> checkpoint, vocab;
  std::string input, text, output, html;
  std::size_t top_k = 5;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

int cmd_predict(const InferFlags& f, std::ostream& out) {
  RunConfig cfg = base_config(f.config);
  apply_flag(f.checkpoint, cfg.paths.checkpoint);
  apply_flag(f.vocab, cfg.paths.vocab);
  LoadedModel lm = load_model(cfg.paths.checkpoint, cfg.paths.vocab);
  const auto docs = read_documents(f.input, f.text);
  const auto max_len = static_cast<std::size_t>(lm.checkpoint.model.config().max_sequence_length);
  std::vector<Example> examples;
  for (const auto& [id, text] : docs) examples.push_back({id, tokenize(text, lm.vocab, max_len), {}, -1});
  const EvalResult r = evaluate(lm.checkpoint.model, lm.descriptions, examples, f.jobs);
  std::string lines;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const DocumentPrediction& p = r.predictions[i];
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t l : p.predicted) {
      labels.push_back({{"label", lm.checkpoint.labels[l].id}, {"probability", p.probabilities(static_cast<Index>(l))}});
    }
    lines += nlohmann::json{{"id", examples[i].id}, {"labels", labels}}.dump() + "\n";
  }
  if (f.output.empty()) {
    out << lines;
  } else {
    write_text(f.output, lines);
  }
  return 0;
}

int cmd_explain(const InferFlags& f, std::ostream& out) {
  RunConfig cfg = base_config(f.config);
  apply_flag(f.checkpoint, cfg.paths.checkpoint);
  apply_flag(f.vocab, cfg.paths.vocab);
  LoadedModel lm = load_model(cfg.paths.checkpoint, cfg.paths.vocab);
  const auto docs = read_documents(f.input, f.text);
  const Predictor predictor(lm.checkpoint.model, lm.descriptions);
  std::vector<Explanation> explanations(docs.size());
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < docs.size(); i += stride) {
      explanations[i] =
          explain_document(predictor, lm.vocab, lm.checkpoint.labels, docs[i].first, docs[i].second, lm.checkpoint_hash);
    }
  };
  // Input errors surface before any thread starts.
  const auto max_len = static_cast<std::size_t>(lm.checkpoint.model.config().max_sequence_length);
  for (const auto& [id, text] : docs) {
    if (tokenize(text, lm.vocab, max_len).ids.size() <= 2) {
      throw InputError("document '" + id + "' is empty after tokenization");
    }
  }
  const unsigned jobs = std::max(1u, std::min<unsigned>(f.jobs, static_cast<unsigned>(docs.size())));
  if (jobs == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> workers;
    for (unsigned j = 0; j < jobs; ++j) workers.emplace_back(run, j, jobs);
    for (std::thread& w : workers) w.join();
  }

  std::string records;
  for (const Explanation& e : explanations) records += explanation_json(e, f.top_k).dump() + "\n";
  if (f.output.empty()) {
    out << records;
  } else {
    write_text(f.output, records);
    if (f.top_k > 0) {
      for (const Explanation& e : explanations) out << render_terminal(e, f.top_k);
    }
  }
  if (!f.html.empty()) write_text(f.html, render_html(explanations, f.top_k));
  return 0;
}

struct VocabFlags {
  std::string config;
  std::optional<std::string> corpus, format, descriptions, vocab;
  std::optional<int> target_size, min_frequency;
  std::optional<std::uint64_t> seed;
};

int cmd_build_vocab(const VocabFlags& f, std::ostream& out) {
  RunConfig cfg = base_config(f.config);
  apply_flag(f.corpus, cfg.paths.corpus);
  apply_flag(f.format, cfg.paths.format);
  apply_flag(f.descriptions, cfg.paths.descriptions);
  apply_flag(f.vocab, cfg.paths.vocab);
  apply_flag(f.target_size, cfg.vocab_target_size);
  apply_flag(f.min_frequency, cfg.vocab_min_frequency);
  if (cfg.vocab_target_size <= 4) {
    throw ConfigError("vocabulary target size must exceed the 4 special tokens, got " +
                      std::to_string(cfg.vocab_target_size));
  }
  if (cfg.vocab_min_frequency < 1) throw ConfigError("vocabulary min frequency must be >= 1");
  if (cfg.paths.vocab.empty()) throw ConfigError("missing vocab output path");
  require_file(cfg.paths.corpus, "corpus");
  require_file(cfg.paths.descriptions, "descriptions");
  const Corpus corpus =
      load_corpus(cfg.paths.corpus, parse_corpus_format(cfg.paths.format), cfg.paths.descriptions);
  std::vector<std::string> texts;
  for (const Instance& inst : corpus.instances) texts.push_back(inst.text);
  for (const LabelDef& l : corpus.labels) texts.push_back(l.description);
  const Vocab vocab = build_vocab(texts, static_cast<std::size_t>(cfg.vocab_target_size),
                                  static_cast<std::size_t>(cfg.vocab_min_frequency));
  vocab.save(cfg.paths.vocab);
  out << "vocabulary size " << vocab.size() << '\n';
  return 0;
}

struct SyntheticFlags {
  SyntheticOptions options;
  std::string out_dir;
};

int cmd_make_synthetic(const SyntheticFlags& f, std::ostream& out) {
  const SyntheticCorpus s = make_synthetic_corpus(f.options);
  const std::filesystem::path dir = f.out_dir;
  std::filesystem::create_directories(dir);
  save_corpus(s.corpus, dir / "corpus.tsv");
  save_descriptions(s.corpus.labels, dir / "descriptions.tsv");
  nlohmann::json keywords = nlohmann::json::object();
  for (std::size_t l = 0; l < s.keywords.size(); ++l) keywords[s.corpus.labels[l].id] = s.keywords[l];
  write_text(dir / "keywords.json", keywords.dump(2) + "\n");
  out << "wrote " << s.corpus.instances.size() << " documents ("
      << (f.options.multi_label ? "hoc_style" : "disease5_style") << ") to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LAME: label attention text classification"};
  app.name("lame");
  app.require_subcommand(1);
  // A repeated flag takes its last value, so callers can override earlier arguments.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  VocabFlags vf;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "learn a subword vocabulary from a corpus");
  add_config_flags(*vocab_cmd, vf.config);
  vocab_cmd->add_option("--corpus", vf.corpus);
  vocab_cmd->add_option("--format", vf.format, "hoc_style | disease5_style");
  vocab_cmd->add_option("--descriptions", vf.descriptions);
  vocab_cmd->add_option("--vocab,-o", vf.vocab, "output vocabulary file");
  vocab_cmd->add_option("--target-size", vf.target_size);
  vocab_cmd->add_option("--min-frequency", vf.min_frequency);
  vocab_cmd->add_option("--seed", vf.seed, "accepted for uniformity; vocabulary building is deterministic");

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints and a report");
  add_config_flags(*train_cmd, tf.config);
  train_cmd->add_option("--corpus", tf.corpus);
  train_cmd->add_option("--format", tf.format, "hoc_style | disease5_style");
  train_cmd->add_option("--descriptions", tf.descriptions);
  train_cmd->add_option("--vocab", tf.vocab);
  train_cmd->add_option("--output-dir,-o", tf.output_dir);
  train_cmd->add_option("--loss", tf.loss, "cross_entropy | bce | f_measure");
  train_cmd->add_option("--epochs", tf.epochs);
  train_cmd->add_option("--batch-size", tf.batch_size);
  train_cmd->add_option("--hidden", tf.hidden);
  train_cmd->add_option("--encoder-layers", tf.encoder_layers);
  train_cmd->add_option("--encoder-heads", tf.encoder_heads);
  train_cmd->add_option("--label-heads", tf.label_heads);
  train_cmd->add_option("--label-blocks", tf.label_blocks);
  train_cmd->add_option("--max-len", tf.max_len);
  train_cmd->add_option("--warm-up", tf.warm_up);
  train_cmd->add_option("--lr-encoder", tf.lr_encoder);
  train_cmd->add_option("--lr-label-attention", tf.lr_label_attention);
  train_cmd->add_option("--lr-head", tf.lr_head);
  train_cmd->add_option("--weight-decay", tf.weight_decay);
  train_cmd->add_option("--dropout", tf.dropout);
  train_cmd->add_option("--init-std", tf.init_std);
  train_cmd->add_option("--seed", tf.seed);
  train_cmd->add_option("--split-seed", tf.split_seed);
  train_cmd->add_flag("--freeze-encoder", tf.freeze_encoder, "train only the layers above the encoder");

  EvalFlags ef;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a corpus split");
  add_config_flags(*eval_cmd, ef.config);
  eval_cmd->add_option("--checkpoint,-c", ef.checkpoint);
  eval_cmd->add_option("--corpus", ef.corpus);
  eval_cmd->add_option("--format", ef.format);
  eval_cmd->add_option("--descriptions", ef.descriptions);
  eval_cmd->add_option("--vocab", ef.vocab);
  eval_cmd->add_option("--split", ef.which, "train | dev | test | all");
  eval_cmd->add_option("--split-seed", ef.split_seed);
  eval_cmd->add_option("--metrics", ef.metrics_out, "write metrics JSON here");
  eval_cmd->add_option("--predictions", ef.predictions_out, "write per-document predictions (JSONL) here");
  eval_cmd->add_option("--jobs,-j", ef.jobs)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", ef.seed, "accepted for uniformity; evaluation is deterministic");

  InferFlags pf;
  auto* predict_cmd = app.add_subcommand("predict", "predict labels for raw text");
  add_config_flags(*predict_cmd, pf.config);
  predict_cmd->add_option("--checkpoint,-c", pf.checkpoint);
  predict_cmd->add_option("--vocab", pf.vocab);
  predict_cmd->add_option("--input,-i", pf.input, "one document per line");
  predict_cmd->add_option("--text,-t", pf.text);
  predict_cmd->add_option("--output,-o", pf.output);
  predict_cmd->add_option("--jobs,-j", pf.jobs)->check(CLI::PositiveNumber);
  predict_cmd->add_option("--seed", pf.seed, "accepted for uniformity");

  InferFlags xf;
  auto* explain_cmd = app.add_subcommand("explain", "attention explanations for predicted labels");
  add_config_flags(*explain_cmd, xf.config);
  explain_cmd->add_option("--checkpoint,-c", xf.checkpoint);
  explain_cmd->add_option("--vocab", xf.vocab);
  explain_cmd->add_option("--input,-i", xf.input, "one document per line");
  explain_cmd->add_option("--text,-t", xf.text);
  explain_cmd->add_option("--output,-o", xf.output, "JSONL records; the terminal rendering then goes to stdout");
  explain_cmd->add_option("--html", xf.html, "standalone HTML rendering");
  explain_cmd->add_option("--top-k,-k", xf.top_k, "highlighted words per label; 0 records only");
  explain_cmd->add_option("--jobs,-j", xf.jobs)->check(CLI::PositiveNumber);
  explain_cmd->add_option("--seed", xf.seed, "accepted for uniformity");

  SyntheticFlags sf;
  auto* synth_cmd = app.add_subcommand("make-synthetic", "write a planted-keyword corpus and its descriptions");
  synth_cmd->add_option("--out-dir,-o", sf.out_dir)->required();
  synth_cmd->add_option("--labels", sf.options.num_labels);
  synth_cmd->add_option("--docs-per-label", sf.options.docs_per_label);
  synth_cmd->add_option("--noise-vocab", sf.options.vocab_noise_size);
  synth_cmd->add_option("--keywords", sf.options.keywords_per_label);
  synth_cmd->add_flag("--multi-label", sf.options.multi_label);
  synth_cmd->add_option("--max-labels", sf.options.max_labels_per_doc);
  synth_cmd->add_option("--seed", sf.options.seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*vocab_cmd) return cmd_build_vocab(vf, out);
    if (*train_cmd) return cmd_train(tf, out);
    if (*eval_cmd) return cmd_eval(ef, out);
    if (*predict_cmd) return cmd_predict(pf, out);
    if (*explain_cmd) return cmd_explain(xf, out);
    if (*synth_cmd) return cmd_make_synthetic(sf, out);
  } catch (const CompatibilityError& e) {
    err << "compatibility error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace lame
