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

#include "scnn/transfer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

#include "scnn/error.h"
#include "scnn/random.h"
#include "scnn/similarity.h"

namespace scnn {
namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::set<std::string> ConvLayerNames(const ScnnModel& model) {
  std::set<std::string> names;
  for (std::size_t k = 0; k < model.conv.size(); ++k) names.insert("gc" + std::to_string(k));
  return names;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

TransferPlan MakeTransferPlan(std::shared_ptr<const ScnnModel> source_model,
                              const Graph& source_graph, const Corpus& target_train,
                              double finetune_fraction, const TrainConfig& finetune_config) {
  if (!source_model || !source_model->basis) throw DataError("transfer needs a trained source model");
  if (source_model->nodes() != source_graph.size()) {
    throw DataError("source model has " + std::to_string(source_model->nodes()) +
                    " nodes but the source graph has " + std::to_string(source_graph.size()));
  }
  UnionGraph aligned = AlignUnion(source_graph, target_train);
  TransferPlan plan;
  plan.source_basis = source_model->basis;
  plan.source_nodes = aligned.source_nodes;
  plan.union_vocabulary = aligned.graph.vocabulary;
  plan.target_basis = std::make_shared<const SpectralBasis>(
      EmbedIsolatedNodes(*source_model->basis, aligned.graph.size() - aligned.source_nodes));
  plan.target_train = BuildDataset(target_train, plan.union_vocabulary);
  plan.frozen = ConvLayerNames(*source_model);
  plan.finetune_fraction = finetune_fraction;
  plan.finetune_config = finetune_config;
  plan.source_model = std::move(source_model);
  ValidatePlan(plan);
  return plan;
}

void ValidatePlan(const TransferPlan& plan) {
  if (!plan.source_model || !plan.source_basis || !plan.target_basis) throw DataError("incomplete transfer plan");
  if (!(plan.finetune_fraction > 0.0 && plan.finetune_fraction <= 1.0)) {
    throw ConfigError("fine-tune fraction must lie in (0, 1]");
  }
  const auto layers = LayerNames(*plan.source_model);
  for (const std::string& f : plan.frozen) {
    if (std::find(layers.begin(), layers.end(), f) == layers.end()) {
      throw ConfigError("frozen layer '" + f + "' does not exist");
    }
  }
  if (plan.target_basis->nodes() != plan.union_vocabulary.size() ||
      plan.target_train.nodes() != plan.union_vocabulary.size()) {
    throw DataError("target signals are not aligned to the union vocabulary");
  }
  if (plan.target_train.num_classes < 1) throw DataError("target class count unknown");
}

Dataset TargetDataset(const TransferPlan& plan, const Corpus& corpus) {
  return BuildDataset(corpus, plan.union_vocabulary);
}

ScnnModel BuildTransferModel(const TransferPlan& plan) {
  ValidatePlan(plan);
  const ScnnModel& source = *plan.source_model;
  const SpectralBasis& target = *plan.target_basis;
  ScnnModel model;
  model.arch = source.arch;
  model.basis = plan.target_basis;
  model.kernel_degree = source.kernel_degree;
  model.pooling = source.pooling;
  for (const GraphConvLayer& layer : source.conv) {
    GraphConvLayer copy = layer;
    std::size_t dim = 0;
    while (dim < target.dim() && target.filter_index[dim] < layer.basis_dim) ++dim;
    for (std::size_t c = dim; c < target.dim(); ++c) {
      if (target.filter_index[c] < layer.basis_dim) throw DataError("target basis breaks the spectral prefix order");
    }
    copy.basis_dim = dim;
    if (layer.kind == FilterKind::kFree) {
      copy.filters.resize(static_cast<Eigen::Index>(dim), layer.filters.cols());
      for (std::size_t c = 0; c < dim; ++c) {
        copy.filters.row(static_cast<Eigen::Index>(c)) = layer.filters.row(static_cast<Eigen::Index>(target.filter_index[c]));
      }
    }
    model.conv.push_back(std::move(copy));
  }
  const bool same_shape = model.feature_size() == source.feature_size() &&
                          plan.target_train.num_classes == source.num_classes();
  if (plan.reinit_full_head || !same_shape) {
    ReinitHead(model, plan.target_train.num_classes, plan.finetune_config.seed);
  } else {
    model.fc = source.fc;
    ScnnModel fresh = model;
    ReinitHead(fresh, plan.target_train.num_classes, plan.finetune_config.seed);
    model.fc.back() = fresh.fc.back();
  }
  return model;
}

std::vector<std::size_t> FinetuneSubset(const TransferPlan& plan) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(plan.target_train.num_classes));
  for (std::size_t i = 0; i < plan.target_train.size(); ++i) {
    by_class[static_cast<std::size_t>(plan.target_train.labels[i])].push_back(i);
  }
  Rng rng = Rng::Stream(plan.finetune_config.seed, "finetune-sample");
  std::vector<std::size_t> subset;
  for (auto& members : by_class) {
    rng.Shuffle(members);
    const auto take = static_cast<std::size_t>(
        std::llround(plan.finetune_fraction * static_cast<double>(members.size())));
    subset.insert(subset.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(std::min(take, members.size())));
  }
  if (subset.empty()) {
    throw DataError("fine-tune fraction " + std::to_string(plan.finetune_fraction) + " selects no documents");
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

TrainReport Finetune(ScnnModel& model, const TransferPlan& plan, const EpochCallback& on_epoch) {
  ValidatePlan(plan);
  const std::vector<std::size_t> subset = FinetuneSubset(plan);
  Dataset data;
  data.num_classes = plan.target_train.num_classes;
  data.signals.resize(plan.target_train.signals.rows(), static_cast<Eigen::Index>(subset.size()));
  for (std::size_t c = 0; c < subset.size(); ++c) {
    data.signals.col(static_cast<Eigen::Index>(c)) = plan.target_train.signals.col(static_cast<Eigen::Index>(subset[c]));
    data.labels.push_back(plan.target_train.labels[subset[c]]);
  }
  TrainConfig config = plan.finetune_config;
  config.frozen = plan.frozen;
  return Train(model, data, config, on_epoch);
}

void AppendMedianRows(ExperimentTable& table) {
  // Median over seeds per (split, fraction, epoch), in first-seen order.
  using Key = std::tuple<std::string, double, std::size_t>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ExperimentRow*>> groups;
  for (const ExperimentRow& r : table.rows) {
    Key key{r.split, r.fraction, r.epoch};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<ExperimentRow> medians;
  for (const Key& key : order) {
    const auto& members = groups[key];
    std::vector<double> sim, corr, loss, acc, secs, eig;
    for (const ExperimentRow* r : members) {
      sim.push_back(r->sim);
      corr.push_back(r->corr);
      loss.push_back(r->loss);
      acc.push_back(r->accuracy);
      secs.push_back(r->seconds);
      eig.push_back(static_cast<double>(r->eig_count));
    }
    ExperimentRow m = *members.front();
    m.seed.reset();
    m.sim = Median(sim);
    m.corr = Median(corr);
    m.loss = Median(loss);
    m.accuracy = Median(acc);
    m.seconds = Median(secs);
    m.eig_count = static_cast<uint64_t>(std::llround(Median(eig)));
    medians.push_back(std::move(m));
  }
  table.rows.insert(table.rows.end(), medians.begin(), medians.end());
}

ExperimentTable TransferExperiment(const Corpus& source, const Corpus& target,
                                   std::span<const double> fractions,
                                   std::span<const uint64_t> seeds,
                                   const ExperimentConfig& config) {
  if (fractions.empty() || seeds.empty()) throw ConfigError("experiment needs fractions and seeds");
  ExperimentTable table;
  double source_seconds = 0.0, transfer_seconds = 0.0;
  std::size_t transfer_cells = 0;

  for (uint64_t seed : seeds) {
    const auto cell_start = Clock::now();
    const uint64_t eig_start = EigendecompositionCount();
    auto [s_train, s_test] = SplitCorpus(source, config.test_fraction, seed);
    auto [t_train, t_test] = SplitCorpus(target, config.test_fraction, MixSeed(seed));

    // Source pipeline: graph, basis, model.
    const Graph g_source = EnsureConnected(Coge(s_train, config.graph)).graph;
    const Laplacian lap = ComputeLaplacian(g_source, config.laplacian, config.epsilon);
    auto basis = std::make_shared<const SpectralBasis>(Eigendecompose(lap));
    const Dataset src_train = BuildDataset(s_train, g_source.vocabulary);
    const Dataset src_test = BuildDataset(s_test, g_source.vocabulary);

    const Graph g_target = Coge(t_train, config.graph);
    const double sim = GraphSimUnion(g_source, g_target, config.epsilon);
    const double corr = CorpusCorr(s_train, t_train);

    auto row = [&](double fraction, std::size_t epoch, const char* split, const Evaluation& ev,
                   double seconds, uint64_t eig) {
      table.rows.push_back({config.source_name, config.target_name, sim, corr, fraction, seed, epoch, split,
                            ev.mean_loss, ev.accuracy, seconds, eig});
    };

    auto model = std::make_shared<ScnnModel>(InitModel(basis, s_train.num_classes, config.model, seed));
    TrainConfig src_cfg = config.source_train;
    src_cfg.seed = seed;
    Train(*model, src_train, src_cfg, [&](const ScnnModel& m, std::size_t epoch, TrainReport&) {
      row(1.0, epoch, "source", Evaluate(m, src_test), SecondsSince(cell_start), EigendecompositionCount() - eig_start);
    });
    source_seconds += SecondsSince(cell_start);

    TrainConfig ft_cfg = config.finetune;
    ft_cfg.seed = seed;
    const TransferPlan base_plan = MakeTransferPlan(model, g_source, t_train, fractions.front(), ft_cfg);
    const Dataset tgt_test = TargetDataset(base_plan, t_test);
    Eigen::MatrixXd test_features;
    for (double fraction : fractions) {
      const auto transfer_start = Clock::now();
      const uint64_t eig_before = EigendecompositionCount();
      TransferPlan plan = base_plan;
      plan.finetune_fraction = fraction;
      ScnnModel transferred = BuildTransferModel(plan);
      // The copied conv stack is identical for every fraction.
      if (test_features.size() == 0) test_features = ConvFeatures(transferred, tgt_test.signals);
      Finetune(transferred, plan, [&](const ScnnModel& m, std::size_t epoch, TrainReport&) {
        row(fraction, epoch, "transfer", EvaluateFeatures(m, test_features, tgt_test.labels),
            SecondsSince(transfer_start), EigendecompositionCount() - eig_before);
      });
      transfer_seconds += SecondsSince(transfer_start);
      ++transfer_cells;
    }

    if (config.train_scratch) {
      const auto scratch_start = Clock::now();
      const uint64_t eig_before = EigendecompositionCount();
      const Graph g_scratch = EnsureConnected(g_target).graph;
      auto scratch_basis = std::make_shared<const SpectralBasis>(
          Eigendecompose(ComputeLaplacian(g_scratch, config.laplacian, config.epsilon)));
      const Dataset sc_train = BuildDataset(t_train, g_scratch.vocabulary);
      const Dataset sc_test = BuildDataset(t_test, g_scratch.vocabulary);
      ScnnModel scratch = InitModel(scratch_basis, t_train.num_classes, config.model, seed);
      Train(scratch, sc_train, src_cfg, [&](const ScnnModel& m, std::size_t epoch, TrainReport&) {
        row(1.0, epoch, "scratch", Evaluate(m, sc_test), SecondsSince(scratch_start),
            EigendecompositionCount() - eig_before);
      });
    }
  }
  table.mean_source_seconds = source_seconds / static_cast<double>(seeds.size());
  table.mean_transfer_seconds = transfer_cells ? transfer_seconds / static_cast<double>(transfer_cells) : 0.0;

  AppendMedianRows(table);
  return table;
}

ExperimentTable TransferFromModel(std::shared_ptr<const ScnnModel> source_model, const Graph& source_graph,
                                  const Corpus* source_corpus, const Corpus& target,
                                  std::span<const double> fractions, std::span<const uint64_t> seeds,
                                  const ExperimentConfig& config) {
  if (fractions.empty() || seeds.empty()) throw ConfigError("transfer needs fractions and seeds");
  ExperimentTable table;
  double transfer_seconds = 0.0;
  for (uint64_t seed : seeds) {
    auto [t_train, t_test] = SplitCorpus(target, config.test_fraction, MixSeed(seed));
    const double sim = GraphSimUnion(source_graph, Coge(t_train, config.graph), config.epsilon);
    const double corr = source_corpus ? CorpusCorr(*source_corpus, t_train) : std::nan("");
    TrainConfig ft_cfg = config.finetune;
    ft_cfg.seed = seed;
    const TransferPlan base_plan = MakeTransferPlan(source_model, source_graph, t_train, fractions.front(), ft_cfg);
    const Dataset tgt_test = TargetDataset(base_plan, t_test);
    Eigen::MatrixXd test_features;
    for (double fraction : fractions) {
      const auto start = Clock::now();
      const uint64_t eig_before = EigendecompositionCount();
      TransferPlan plan = base_plan;
      plan.finetune_fraction = fraction;
      ScnnModel transferred = BuildTransferModel(plan);
      if (test_features.size() == 0) test_features = ConvFeatures(transferred, tgt_test.signals);
      Finetune(transferred, plan, [&](const ScnnModel& m, std::size_t epoch, TrainReport&) {
        const Evaluation ev = EvaluateFeatures(m, test_features, tgt_test.labels);
        table.rows.push_back({config.source_name, config.target_name, sim, corr, fraction, seed, epoch, "transfer",
                              ev.mean_loss, ev.accuracy, SecondsSince(start), EigendecompositionCount() - eig_before});
      });
      transfer_seconds += SecondsSince(start);
    }
  }
  table.mean_transfer_seconds = transfer_seconds / static_cast<double>(seeds.size() * fractions.size());
  AppendMedianRows(table);
  return table;
}

std::optional<double> MedianFinalAccuracy(const ExperimentTable& table, const std::string& split,
                                          double fraction) {
  std::optional<double> value;
  std::size_t last_epoch = 0;
  for (const ExperimentRow& r : table.rows) {
    if (r.seed || r.split != split || std::abs(r.fraction - fraction) > 1e-12) continue;
    if (!value || r.epoch >= last_epoch) {
      value = r.accuracy;
      last_epoch = r.epoch;
    }
  }
  return value;
}

std::string ExperimentCsv(const ExperimentTable& table, bool with_timing) {
  std::string out = "source,target,sim,corr,fraction,seed,epoch,split,loss,accuracy,seconds,eig_count\n";
  char line[512];
  for (const ExperimentRow& r : table.rows) {
    const std::string seed = r.seed ? std::to_string(*r.seed) : "median";
    std::snprintf(line, sizeof line, "%s,%s,%.12g,%.12g,%.6g,%s,%zu,%s,%.12g,%.12g,%.6f,%llu\n", r.source.c_str(),
                  r.target.c_str(), r.sim, r.corr, r.fraction, seed.c_str(), r.epoch, r.split.c_str(), r.loss,
                  r.accuracy, with_timing ? r.seconds : 0.0, static_cast<unsigned long long>(r.eig_count));
    out += line;
  }
  return out;
}

}  // namespace scnn
