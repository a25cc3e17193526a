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

#ifndef SCNN_TRANSFER_H_
#define SCNN_TRANSFER_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scnn/corpus.h"
#include "scnn/graph.h"
#include "scnn/network.h"
#include "scnn/spectral.h"

namespace scnn {

// Fine-tune fractions of the target training data and repeat count used by
// the transfer experiments.
inline constexpr double kDefaultFractions[] = {0.01, 0.03, 0.05, 0.10};
inline constexpr std::size_t kDefaultSeedCount = 10;

// Binds a trained source model to a target corpus. The target signals live
// on the union vocabulary (source nodes first), and the target basis is the
// source basis with target-only words appended as isolated nodes.
struct TransferPlan {
  std::shared_ptr<const ScnnModel> source_model;
  std::shared_ptr<const SpectralBasis> source_basis;
  std::shared_ptr<const SpectralBasis> target_basis;
  Vocabulary union_vocabulary;
  std::size_t source_nodes = 0;
  Dataset target_train;
  // Layer identifiers kept fixed; defaults to every GC layer.
  std::set<std::string> frozen;
  double finetune_fraction = 0.1;
  TrainConfig finetune_config;
  // Re-initialize every FC layer (true) or only the output layer.
  bool reinit_full_head = true;
};

// Aligns the target corpus to the source graph's union vocabulary and
// extends the basis. Frozen defaults to all GC layers.
TransferPlan MakeTransferPlan(std::shared_ptr<const ScnnModel> source_model,
                              const Graph& source_graph, const Corpus& target_train,
                              double finetune_fraction, const TrainConfig& finetune_config);

void ValidatePlan(const TransferPlan& plan);

// Signals of a target-side corpus (e.g. the test split) on the plan's union
// vocabulary.
Dataset TargetDataset(const TransferPlan& plan, const Corpus& corpus);

// Copies the GC layers onto the target basis and builds a fresh head for the
// target classes. Polynomial filters are copied verbatim; free multipliers
// are carried over per eigenpair, isolated nodes reusing the multiplier of
// the eigenvalue they sort next to. Never decomposes a matrix.
ScnnModel BuildTransferModel(const TransferPlan& plan);

// Indices of the stratified fine-tune subset: round(fraction * n_c) per
// class, sampled with the fine-tune seed. Throws DataError when empty.
std::vector<std::size_t> FinetuneSubset(const TransferPlan& plan);

// Trains only the non-frozen layers on the fine-tune subset with a fresh
// optimizer state.
TrainReport Finetune(ScnnModel& model, const TransferPlan& plan, const EpochCallback& on_epoch = {});

struct ExperimentConfig {
  std::string source_name = "source";
  std::string target_name = "target";
  ModelConfig model;
  CogeOptions graph;
  LaplacianKind laplacian = LaplacianKind::kBasic;
  double epsilon = kDefaultRestartEpsilon;
  TrainConfig source_train;
  TrainConfig finetune;
  double test_fraction = 0.2;
  // Also train a target model from scratch on all target training data.
  bool train_scratch = true;
};

struct ExperimentRow {
  std::string source, target;
  double sim = 0.0, corr = 0.0;
  double fraction = 1.0;
  std::optional<uint64_t> seed;  // empty for median rows
  std::size_t epoch = 0;
  // "source" (source model, source test split), "scratch" (target model
  // from scratch, target test split) or "transfer".
  std::string split;
  double loss = 0.0, accuracy = 0.0, seconds = 0.0;
  uint64_t eig_count = 0;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  // Mean wall-clock seconds of source training (graph, decomposition and
  // training) and of transfer (model build and fine-tune) per cell.
  double mean_source_seconds = 0.0;
  double mean_transfer_seconds = 0.0;
};

// For each seed: splits both corpora, builds and decomposes the source
// graph, trains the source model, then transfers and fine-tunes once per
// fraction (and optionally trains a target model from scratch). Rows are
// per epoch, evaluated on the relevant test split, followed by median rows
// over seeds. Seeds are processed in the given order.
ExperimentTable TransferExperiment(const Corpus& source, const Corpus& target,
                                   std::span<const double> fractions,
                                   std::span<const uint64_t> seeds,
                                   const ExperimentConfig& config);

// Transfer rows only, starting from an already trained source model. The
// source corpus is optional and only feeds the corr column (NaN without it).
ExperimentTable TransferFromModel(std::shared_ptr<const ScnnModel> source_model, const Graph& source_graph,
                                  const Corpus* source_corpus, const Corpus& target,
                                  std::span<const double> fractions, std::span<const uint64_t> seeds,
                                  const ExperimentConfig& config);

// Appends one median-over-seeds row per (split, fraction, epoch).
void AppendMedianRows(ExperimentTable& table);

// Final-epoch median accuracy of the median rows for a split and fraction.
std::optional<double> MedianFinalAccuracy(const ExperimentTable& table, const std::string& split,
                                          double fraction);

// Columns: source,target,sim,corr,fraction,seed,epoch,split,loss,accuracy,
// seconds,eig_count. Timings are zero unless with_timing is set.
std::string ExperimentCsv(const ExperimentTable& table, bool with_timing);

}  // namespace scnn

#endif  // SCNN_TRANSFER_H_
