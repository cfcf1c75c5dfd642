#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "lame/cli.hpp"
#include "lame/data.hpp"

using namespace lame;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<nlohmann::json> jsonl(const std::string& text) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

// A small multi-class corpus with its vocabulary, shared by the tests below.
struct Workspace {
  fs::path dir;
  fs::path corpus, descriptions, vocab, run;

  explicit Workspace(const std::string& name, bool multi_label = false) {
    dir = fs::temp_directory_path() / ("lame_cli_" + name);
    fs::remove_all(dir);
    std::vector<std::string> synth = {"make-synthetic", "-o", dir.string(), "--labels", "3", "--docs-per-label", "6",
                                      "--noise-vocab", "20", "--seed", "2"};
    if (multi_label) synth.push_back("--multi-label");
    REQUIRE(cli(synth).code == 0);
    corpus = dir / "corpus.tsv";
    descriptions = dir / "descriptions.tsv";
    vocab = dir / "vocab.txt";
    run = dir / "run";
    REQUIRE(cli({"build-vocab", "--corpus", corpus.string(), "--format", format(multi_label), "--descriptions",
                 descriptions.string(), "-o", vocab.string(), "--target-size", "120", "--min-frequency", "1"})
                .code == 0);
  }

  static std::string format(bool multi_label) { return multi_label ? "hoc_style" : "disease5_style"; }

  std::vector<std::string> train_args(bool multi_label = false) const {
    return {"train",          "--corpus",     corpus.string(), "--format",       format(multi_label),
            "--descriptions", descriptions.string(),           "--vocab",        vocab.string(),
            "-o",             run.string(),   "--hidden",      "16",             "--encoder-layers",
            "1",              "--encoder-heads", "2",          "--label-heads",  "2",
            "--max-len",      "24",           "--epochs",      "2",              "--batch-size",
            "4",              "--warm-up",    "0.3",           "--seed",         "1"};
  }
};

}  // namespace

TEST_CASE("cli: help and usage errors") {
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 1);
  CHECK(cli({"no-such-command"}).code == 1);
  CHECK(cli({"train", "--epochs", "many"}).code == 1);
}

TEST_CASE("cli: build-vocab writes a deterministic vocabulary") {
  Workspace ws("vocab");
  const std::string first = slurp(ws.vocab);
  CHECK(first.starts_with("[PAD]\n[UNK]\n[CLS]\n[SEP]\n"));
  const fs::path again = ws.dir / "again.txt";
  REQUIRE(cli({"build-vocab", "--corpus", ws.corpus.string(), "--format", "disease5_style", "--descriptions",
               ws.descriptions.string(), "-o", again.string(), "--target-size", "120", "--min-frequency", "1"})
              .code == 0);
  CHECK(slurp(again) == first);
  const Result r = cli({"build-vocab", "--corpus", ws.corpus.string(), "--format", "disease5_style", "--descriptions",
                        ws.descriptions.string(), "-o", again.string(), "--target-size", "4"});
  CHECK(r.code == 1);
  CHECK(r.err.find("target size") != std::string::npos);
  CHECK(cli({"build-vocab", "--corpus", (ws.dir / "missing.tsv").string(), "--format", "disease5_style",
             "--descriptions", ws.descriptions.string(), "-o", again.string()})
            .code == 1);
}

TEST_CASE("cli: train, eval, predict and explain round trip") {
  Workspace ws("roundtrip");
  const Result t = cli(ws.train_args());
  REQUIRE_MESSAGE(t.code == 0, t.err);
  for (const char* f : {"run_config.json", "report.jsonl", "best.ckpt", "final.ckpt"}) CHECK(fs::exists(ws.run / f));
  const auto report = jsonl(slurp(ws.run / "report.jsonl"));
  REQUIRE(report.size() == 3);
  CHECK(report.back().contains("summary"));

  const fs::path ckpt = ws.run / "best.ckpt";
  const fs::path metrics = ws.dir / "metrics.json", preds = ws.dir / "preds.jsonl";
  const Result e = cli({"eval", "-c", ckpt.string(), "--corpus", ws.corpus.string(), "--descriptions",
                        ws.descriptions.string(), "--vocab", ws.vocab.string(), "--split", "all", "--metrics",
                        metrics.string(), "--predictions", preds.string(), "--jobs", "2"});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  const auto m = nlohmann::json::parse(slurp(metrics));
  const auto rows = jsonl(slurp(preds));
  CHECK(m["documents"] == 18);
  REQUIRE(rows.size() == 18);
  int correct = 0;
  for (const auto& row : rows) {
    REQUIRE(row["predicted"].size() == 1);
    correct += row["predicted"][0] == row["gold"];
  }
  CHECK(m["accuracy"].get<double>() == doctest::Approx(correct / 18.0));

  const Result p = cli({"predict", "-c", ckpt.string(), "--vocab", ws.vocab.string(), "--text", "hello world"});
  REQUIRE_MESSAGE(p.code == 0, p.err);
  const auto pr = jsonl(p.out);
  REQUIRE(pr.size() == 1);
  CHECK(pr[0]["labels"].size() == 1);

  const std::string first_line = slurp(ws.corpus).substr(0, slurp(ws.corpus).find('\n'));
  const std::string doc = first_line.substr(first_line.find('\t') + 1);
  const Result x = cli({"explain", "-c", ckpt.string(), "--vocab", ws.vocab.string(), "--text", doc, "--top-k", "0"});
  REQUIRE_MESSAGE(x.code == 0, x.err);
  const auto xr = jsonl(x.out);
  REQUIRE(xr.size() == 1);
  CHECK(xr[0]["strategy"] == "last_block_mean_heads");
  CHECK(xr[0]["checkpoint_hash"].get<std::string>().size() == 16);
  CHECK(xr[0]["config_hash"] == nlohmann::json::parse(slurp(metrics))["config_hash"]);
  const auto& label = xr[0]["labels"][0];
  CHECK(label["highlights"].empty());
  double total = 0;
  for (double w : label["token_weights"]) total += w;
  CHECK(total == doctest::Approx(1.0));

  const fs::path html = ws.dir / "x.html", out = ws.dir / "x.jsonl";
  const Result xh = cli({"explain", "-c", ckpt.string(), "--vocab", ws.vocab.string(), "--text", doc, "--output",
                         out.string(), "--html", html.string()});
  REQUIRE(xh.code == 0);
  CHECK(slurp(html).starts_with("<!DOCTYPE html>"));
  CHECK(jsonl(slurp(out)).size() == 1);

  CHECK(cli({"explain", "-c", ckpt.string(), "--vocab", ws.vocab.string(), "--text", "   "}).code == 1);
}

TEST_CASE("cli: incompatible inputs exit with status 1") {
  Workspace ws("compat");
  std::vector<std::string> bad = ws.train_args();
  bad.insert(bad.end(), {"--loss", "f_measure"});
  const Result r = cli(bad);
  CHECK(r.code == 1);
  CHECK(r.err.find("configuration error") != std::string::npos);

  REQUIRE(cli(ws.train_args()).code == 0);
  const fs::path other = ws.dir / "other_vocab.txt";
  REQUIRE(cli({"build-vocab", "--corpus", ws.corpus.string(), "--format", "disease5_style", "--descriptions",
               ws.descriptions.string(), "-o", other.string(), "--target-size", "60", "--min-frequency", "1"})
              .code == 0);
  const Result v = cli({"eval", "-c", (ws.run / "best.ckpt").string(), "--corpus", ws.corpus.string(),
                        "--descriptions", ws.descriptions.string(), "--vocab", other.string()});
  CHECK(v.code == 1);
  CHECK(v.err.find("compatibility error") != std::string::npos);
  CHECK(cli({"predict", "-c", (ws.dir / "nope.ckpt").string(), "--vocab", ws.vocab.string(), "--text", "x"}).code ==
        1);
}

TEST_CASE("cli: config file with flag overrides") {
  Workspace ws("config");
  RunConfig cfg;
  cfg.paths.corpus = ws.corpus.string();
  cfg.paths.format = "disease5_style";
  cfg.paths.descriptions = ws.descriptions.string();
  cfg.paths.vocab = ws.vocab.string();
  cfg.paths.output_dir = ws.run.string();
  cfg.model.hidden = 16;
  cfg.model.encoder_layers = 1;
  cfg.model.encoder_heads = 2;
  cfg.model.label_heads = 2;
  cfg.model.max_sequence_length = 24;
  cfg.train.epochs = 5;
  cfg.train.batch_size = 4;
  const fs::path path = ws.dir / "run.json";
  std::ofstream(path) << nlohmann::json(cfg).dump(2);
  CHECK(load_run_config(path) == cfg);
  REQUIRE(cli({"train", "--config", path.string(), "--epochs", "1", "--warm-up", "0.5"}).code == 0);
  CHECK(jsonl(slurp(ws.run / "report.jsonl")).size() == 2);

  std::ofstream(path) << R"({"model": {"hidden": 16}, "typo_key": 1})";
  CHECK(cli({"train", "--config", path.string()}).code == 1);
}

TEST_CASE("cli: a small corpus is memorized") {
  Workspace ws("memorize");
  std::vector<std::string> args = ws.train_args();
  args.insert(args.end(), {"--epochs", "30", "--init-std", "0.1", "--lr-encoder", "1e-3", "--lr-label-attention",
                           "3e-3", "--lr-head", "1e-3", "--hidden", "32", "--encoder-heads", "4", "--label-heads",
                           "4", "--warm-up", "0.1"});
  const Result t = cli(args);
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const fs::path metrics = ws.dir / "m.json";
  REQUIRE(cli({"eval", "-c", (ws.run / "final.ckpt").string(), "--corpus", ws.corpus.string(), "--descriptions",
               ws.descriptions.string(), "--vocab", ws.vocab.string(), "--split", "train", "--metrics",
               metrics.string()})
              .code == 0);
  CHECK(nlohmann::json::parse(slurp(metrics))["accuracy"].get<double>() == 1.0);
}
