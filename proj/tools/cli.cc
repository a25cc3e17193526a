// Copyright 2026 The scnn-transfer Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scnn/corpus.h"
#include "scnn/error.h"
#include "scnn/graph.h"
#include "scnn/io.h"
#include "scnn/network.h"
#include "scnn/similarity.h"
#include "scnn/spectral.h"
#include "scnn/transfer.h"

namespace scnn::cli {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

struct Options {
  // Shared.
  std::string config;
  uint64_t seed = 0;
  std::string out_dir = ".";
  std::string laplacian = "basic";
  double epsilon = kDefaultRestartEpsilon;
  std::string graph_method = "coge";
  std::string arch = "GC8-GC8-FC1K";
  std::size_t kernel_degree = kDefaultKernelDegree;
  double lr = kDefaultLearningRate;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::vector<double> fractions{std::begin(kDefaultFractions), std::end(kDefaultFractions)};
  std::size_t seeds = kDefaultSeedCount;
  // Corpus and graph construction.
  std::size_t vocab_size = kDefaultVocabularySize;
  std::size_t window = kDefaultWindow;
  bool normalize = false;
  bool raw_counts = false;
  std::size_t sge_hidden = SgeOptions{}.hidden_units;
  std::size_t sge_epochs = SgeOptions{}.epochs;
  std::size_t sge_neighbors = SgeOptions{}.neighbors;
  bool no_pooling = false;
  bool timing = false;
  double val_fraction = 0.0;
  double test_fraction = 0.2;
  std::size_t finetune_epochs = 0;
  // Paths.
  std::string corpus, corpus_b, graph, basis, checkpoint;
  std::string source_corpus, target_corpus, source_checkpoint;
  // synth
  double overlap = 0.9;
  std::size_t docs_per_corpus = 0;
  bool no_scratch = false;
};

void AddShared(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key=value file; command-line flags take precedence");
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--laplacian", o.laplacian, "basic, rw or rwr")->check(CLI::IsMember({"basic", "rw", "rwr"}));
  cmd->add_option("--epsilon", o.epsilon, "Restart constant for rwr and similarity");
  cmd->add_option("--graph-method", o.graph_method, "coge or sge")->check(CLI::IsMember({"coge", "sge"}));
  cmd->add_option("--arch", o.arch, "Layer stack, e.g. GC8-GC8-FC1K");
  cmd->add_option("--kernel-degree", o.kernel_degree, "Polynomial filter degree K");
  cmd->add_option("--lr", o.lr, "AdaGrad learning rate");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size");
  cmd->add_option("--fractions", o.fractions, "Fine-tune fractions")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "Number of seeds, counted up from --seed");
  cmd->add_option("--vocab-size", o.vocab_size, "Vocabulary cap");
  cmd->add_option("--window", o.window, "Co-occurrence window");
  cmd->add_flag("--normalize", o.normalize, "Row-normalize co-occurrence weights");
  cmd->add_flag("--raw-counts", o.raw_counts, "Raw count signals instead of ln(1 + count)");
  cmd->add_flag("--timing", o.timing, "Write wall-clock seconds into CSV outputs");
}

ModelConfig MakeModelConfig(const Options& o) {
  ModelConfig m;
  m.arch = Architecture::Parse(o.arch);
  m.kernel_degree = o.kernel_degree;
  m.pooling = !o.no_pooling;
  return m;
}

TrainConfig MakeTrainConfig(const Options& o, std::size_t epochs) {
  if (o.batch_size == 0) throw ConfigError("--batch-size must be positive");
  if (!(o.lr > 0.0)) throw ConfigError("--lr must be positive");
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = o.batch_size;
  t.learning_rate = o.lr;
  t.seed = o.seed;
  t.val_fraction = o.val_fraction;
  return t;
}

Corpus ReadCorpus(const Options& o, const std::string& path) {
  if (path.empty()) throw ConfigError("a corpus path is required");
  return LoadCorpus(path, o.vocab_size, o.raw_counts ? SignalMode::kRawCount : SignalMode::kLogNormalized);
}

std::vector<uint64_t> SeedList(const Options& o) {
  if (o.seeds == 0) throw ConfigError("--seeds must be positive");
  std::vector<uint64_t> seeds(o.seeds);
  for (std::size_t i = 0; i < o.seeds; ++i) seeds[i] = o.seed + i;
  return seeds;
}

std::string OutPath(const Options& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string Stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void WriteMeta(const Options& o, const std::string& name, json meta, Clock::time_point start) {
  meta["seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  WriteFileAtomic(OutPath(o, name), meta.dump(2) + "\n");
}

int BuildGraphCmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Corpus corpus = ReadCorpus(o, o.corpus);
  Graph raw;
  if (o.graph_method == "sge") {
    SgeOptions s;
    s.hidden_units = o.sge_hidden;
    s.epochs = o.sge_epochs;
    s.neighbors = o.sge_neighbors;
    s.seed = o.seed;
    raw = Sge(corpus, s);
  } else {
    raw = Coge(corpus, CogeOptions{o.window, o.normalize});
  }
  const ConnectedGraph connected = EnsureConnected(raw);
  const Graph& g = connected.graph;
  const LaplacianKind kind = ParseLaplacianKind(o.laplacian);
  const SpectralBasis basis = Eigendecompose(
      ComputeLaplacian(g, kind, kind == LaplacianKind::kRandomWalkRestart ? std::optional(o.epsilon) : std::nullopt));

  SaveGraph(g, OutPath(o, "graph.json"));
  SaveBasis(basis, OutPath(o, "basis.bin"));
  SaveVocabulary(g.vocabulary, OutPath(o, "vocab.txt"));
  const double lmin = basis.eigenvalues(0), lmax = basis.eigenvalues(basis.eigenvalues.size() - 1);
  WriteMeta(o, "build-graph.meta.json",
            {{"command", "build-graph"}, {"method", o.graph_method}, {"laplacian", o.laplacian},
             {"nodes", g.size()}, {"edges", g.EdgeCount()}, {"dropped_nodes", connected.dropped},
             {"lambda_min", lmin}, {"lambda_max", lmax}, {"basis_checksum", BasisChecksum(basis)}},
            start);
  out << "N=" << g.size() << " M=" << g.EdgeCount() << " dropped=" << connected.dropped
      << " lambda_min=" << Fmt(lmin) << " lambda_max=" << Fmt(lmax) << "\n";
  return kExitOk;
}

struct Loaded {
  Graph graph;
  std::shared_ptr<const SpectralBasis> basis;
};

Loaded LoadGraphAndBasis(const Options& o) {
  if (o.graph.empty() || o.basis.empty()) throw ConfigError("--graph and --basis are required");
  Loaded l{LoadGraph(o.graph), std::make_shared<const SpectralBasis>(LoadBasis(o.basis))};
  if (l.basis->nodes() != l.graph.size()) {
    throw DataError("basis has " + std::to_string(l.basis->nodes()) + " nodes, graph has " +
                    std::to_string(l.graph.size()));
  }
  return l;
}

int TrainCmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Loaded l = LoadGraphAndBasis(o);
  const Corpus corpus = ReadCorpus(o, o.corpus);
  const Dataset data = BuildDataset(corpus, l.graph.vocabulary);
  const ModelConfig mc = MakeModelConfig(o);
  ScnnModel model = InitModel(l.basis, corpus.num_classes, mc, o.seed);
  const TrainReport report = Train(model, data, MakeTrainConfig(o, o.epochs));

  SaveCheckpoint(model, OutPath(o, "checkpoint.bin"));
  const std::vector<std::pair<std::string, std::string>> header{
      {"arch", model.arch.ToString()},        {"K", std::to_string(mc.kernel_degree)},
      {"lr", Fmt(o.lr)},                      {"epochs", std::to_string(o.epochs)},
      {"batch_size", std::to_string(o.batch_size)}, {"seed", std::to_string(o.seed)},
      {"laplacian", ToString(l.basis->source_kind)}, {"nodes", std::to_string(l.basis->nodes())},
      {"classes", std::to_string(corpus.num_classes)}, {"dropped_docs", std::to_string(data.dropped)}};
  WriteFileAtomic(OutPath(o, "report.csv"), ReportCsv(report, header, o.timing));
  WriteMeta(o, "train.meta.json",
            {{"command", "train"}, {"train_seconds", report.seconds}, {"eig_count", report.eig_count},
             {"diverged", report.diverged}, {"message", report.message}},
            start);
  if (data.dropped) out << "warning: dropped " << data.dropped << " documents with no in-vocabulary tokens\n";
  const EpochRecord* last = nullptr;
  for (const EpochRecord& r : report.records) {
    if (r.split == "train") last = &r;
  }
  out << "arch=" << model.arch.ToString() << " K=" << mc.kernel_degree << " lr=" << Fmt(o.lr);
  if (last) out << " epoch=" << last->epoch << " loss=" << Fmt(last->loss) << " accuracy=" << Fmt(last->accuracy);
  out << "\n";
  if (report.diverged) {
    out << "diverged: " << report.message << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int EvaluateCmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Loaded l = LoadGraphAndBasis(o);
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const ScnnModel model = LoadCheckpoint(o.checkpoint, l.basis);
  const Corpus corpus = ReadCorpus(o, o.corpus);
  const Dataset data = BuildDataset(corpus, l.graph.vocabulary);
  if (data.num_classes > model.num_classes()) throw DataError("corpus has more classes than the model");
  const Evaluation ev = Evaluate(model, data);
  json j{{"accuracy", ev.accuracy}, {"mean_loss", ev.mean_loss}, {"confusion", ev.confusion},
         {"documents", data.size()}, {"dropped", data.dropped}};
  WriteFileAtomic(OutPath(o, "evaluation.json"), j.dump(2) + "\n");
  WriteMeta(o, "evaluate.meta.json", {{"command", "evaluate"}}, start);
  out << j.dump() << "\n";
  return kExitOk;
}

int TransferCmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  for (double f : o.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
  }
  const Corpus target = ReadCorpus(o, o.target_corpus);
  ExperimentConfig ec;
  ec.target_name = Stem(o.target_corpus);
  ec.model = MakeModelConfig(o);
  ec.graph = CogeOptions{o.window, o.normalize};
  ec.laplacian = ParseLaplacianKind(o.laplacian);
  ec.epsilon = o.epsilon;
  ec.source_train = MakeTrainConfig(o, o.epochs);
  ec.finetune = MakeTrainConfig(o, o.finetune_epochs ? o.finetune_epochs : o.epochs);
  ec.test_fraction = o.test_fraction;
  ec.train_scratch = !o.no_scratch;
  const std::vector<uint64_t> seeds = SeedList(o);

  ExperimentTable table;
  std::string mode;
  if (!o.source_checkpoint.empty()) {
    mode = "checkpoint";
    const Loaded l = LoadGraphAndBasis(o);
    auto model = std::make_shared<const ScnnModel>(LoadCheckpoint(o.source_checkpoint, l.basis));
    std::optional<Corpus> source;
    if (!o.source_corpus.empty()) source = ReadCorpus(o, o.source_corpus);
    ec.source_name = source ? Stem(o.source_corpus) : Stem(o.source_checkpoint);
    table = TransferFromModel(model, l.graph, source ? &*source : nullptr, target, o.fractions, seeds, ec);
  } else if (!o.source_corpus.empty()) {
    mode = "experiment";
    const Corpus source = ReadCorpus(o, o.source_corpus);
    ec.source_name = Stem(o.source_corpus);
    table = TransferExperiment(source, target, o.fractions, seeds, ec);
  } else {
    throw ConfigError("transfer needs --source-checkpoint (with --graph and --basis) or --source-corpus");
  }
  WriteFileAtomic(OutPath(o, "experiment.csv"), ExperimentCsv(table, o.timing));
  WriteMeta(o, "transfer.meta.json",
            {{"command", "transfer"}, {"mode", mode}, {"fractions", o.fractions}, {"seeds", seeds},
             {"mean_source_seconds", table.mean_source_seconds},
             {"mean_transfer_seconds", table.mean_transfer_seconds},
             {"frozen", "all graph convolution layers"}, {"optimizer_state", "reset on transfer"},
             {"default_finetune_fraction", 0.1}},
            start);
  for (double f : o.fractions) {
    if (auto acc = MedianFinalAccuracy(table, "transfer", f)) {
      out << "fraction=" << Fmt(f) << " median_accuracy=" << Fmt(*acc) << "\n";
    }
  }
  if (auto acc = MedianFinalAccuracy(table, "source", 1.0)) out << "source median_accuracy=" << Fmt(*acc) << "\n";
  if (auto acc = MedianFinalAccuracy(table, "scratch", 1.0)) out << "scratch median_accuracy=" << Fmt(*acc) << "\n";
  return kExitOk;
}

json SimilarityJson(const Options& o, const Corpus& a, const Corpus& b) {
  const CogeOptions co{o.window, o.normalize};
  return {{"sim", GraphSimUnion(Coge(a, co), Coge(b, co), o.epsilon)},
          {"corr", CorpusCorr(a, b)},
          {"n_union", UnionSize(a.vocabulary, b.vocabulary)},
          {"epsilon", o.epsilon}};
}

int SimilarityCmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Corpus a = ReadCorpus(o, o.corpus), b = ReadCorpus(o, o.corpus_b);
  const json j = SimilarityJson(o, a, b);
  out << j.dump() << "\n";
  if (o.out_dir != ".") {
    WriteFileAtomic(OutPath(o, "similarity.json"), j.dump() + "\n");
    WriteMeta(o, "similarity.meta.json", {{"command", "similarity"}}, start);
  }
  return kExitOk;
}

int SynthCmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  if (!(o.overlap >= 0.0 && o.overlap <= 1.0)) throw ConfigError("--overlap must lie in [0, 1]");
  const Corpus base = ReadCorpus(o, o.corpus);
  auto [a, b] = SynthesizePair(base, o.overlap, o.seed, SynthOptions{o.docs_per_corpus});
  SaveCorpus(a, OutPath(o, "corpus_a.jsonl"));
  SaveCorpus(b, OutPath(o, "corpus_b.jsonl"));
  json metrics = SimilarityJson(o, a, b);
  json meta{{"command", "synth"}, {"overlap", o.overlap}, {"seed", o.seed}, {"documents_a", a.size()},
            {"documents_b", b.size()}};
  meta.update(metrics);
  WriteMeta(o, "synth.meta.json", meta, start);
  out << metrics.dump() << "\n";
  return kExitOk;
}

// Reads "key = value" lines ('#' comments, [sections] ignored) and returns
// them as "--key=value" arguments for keys not already given on the command
// line.
std::vector<std::string> ConfigArgs(const std::string& path, const std::vector<std::string>& given) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  std::istringstream in(text);
  std::vector<std::string> extra;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    const std::string flag = "--" + key;
    bool overridden = false;
    for (const std::string& g : given) {
      if (g == flag || g.rfind(flag + "=", 0) == 0) overridden = true;
    }
    if (!overridden) extra.push_back(flag + "=" + value);
  }
  return extra;
}

int Dispatch(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Spectral graph convolution networks with transfer across text corpora", "scnn"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build-graph", "Build a word graph and its spectral basis from a corpus");
  auto* train = app.add_subcommand("train", "Train a model on a corpus over a built graph");
  auto* transfer = app.add_subcommand("transfer", "Transfer a source model to a target corpus");
  auto* similarity = app.add_subcommand("similarity", "Graph and corpus similarity of two corpora");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus pair from a base corpus");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a corpus");
  for (auto* cmd : {build, train, transfer, similarity, synth, evaluate}) AddShared(cmd, o);

  build->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  build->add_option("--sge-hidden", o.sge_hidden, "Hidden units of the supervised estimator");
  build->add_option("--sge-epochs", o.sge_epochs, "Epochs of the supervised estimator");
  build->add_option("--sge-neighbors", o.sge_neighbors, "Neighbors kept per node");

  for (auto* cmd : {train, evaluate}) {
    cmd->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
    cmd->add_option("--graph", o.graph, "graph.json from build-graph")->required();
    cmd->add_option("--basis", o.basis, "basis.bin from build-graph")->required();
  }
  train->add_flag("--no-pooling", o.no_pooling, "Keep the full spectrum in every layer");
  train->add_option("--val-fraction", o.val_fraction, "Held-out validation fraction");
  evaluate->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();

  transfer->add_option("--target-corpus", o.target_corpus, "Target corpus JSONL")->required();
  transfer->add_option("--source-corpus", o.source_corpus, "Source corpus JSONL");
  transfer->add_option("--source-checkpoint", o.source_checkpoint, "Trained source checkpoint");
  transfer->add_option("--graph", o.graph, "Source graph.json");
  transfer->add_option("--basis", o.basis, "Source basis.bin");
  transfer->add_option("--test-fraction", o.test_fraction, "Held-out test fraction of each corpus");
  transfer->add_option("--finetune-epochs", o.finetune_epochs, "Fine-tune epochs (default: --epochs)");
  transfer->add_flag("--no-pooling", o.no_pooling, "Keep the full spectrum in every layer");
  transfer->add_flag("--no-scratch", o.no_scratch, "Skip the from-scratch target baseline");

  similarity->add_option("corpus_a", o.corpus, "First corpus JSONL")->required();
  similarity->add_option("corpus_b", o.corpus_b, "Second corpus JSONL")->required();

  synth->add_option("--corpus", o.corpus, "Base corpus JSONL")->required();
  synth->add_option("--overlap", o.overlap, "Shared fraction in [0, 1]");
  synth->add_option("--docs-per-corpus", o.docs_per_corpus, "Documents per corpus (default: half the base)");

  std::vector<std::string> args = raw_args;
  for (std::size_t i = 0; i < raw_args.size(); ++i) {
    std::string path;
    if (raw_args[i] == "--config" && i + 1 < raw_args.size()) path = raw_args[i + 1];
    if (raw_args[i].rfind("--config=", 0) == 0) path = raw_args[i].substr(9);
    if (!path.empty()) {
      for (std::string& a : ConfigArgs(path, raw_args)) args.push_back(std::move(a));
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*build) return BuildGraphCmd(o, out);
  if (*train) return TrainCmd(o, out);
  if (*transfer) return TransferCmd(o, out);
  if (*similarity) return SimilarityCmd(o, out);
  if (*synth) return SynthCmd(o, out);
  return EvaluateCmd(o, out);
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return Dispatch(args, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace scnn::cli
