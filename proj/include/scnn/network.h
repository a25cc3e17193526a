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

#ifndef SCNN_NETWORK_H_
#define SCNN_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "scnn/corpus.h"
#include "scnn/dense.h"
#include "scnn/spectral.h"

namespace scnn {

inline constexpr std::size_t kDefaultKernelDegree = 60;
inline constexpr double kDefaultLearningRate = 0.01;

// Layer stack in the "GC8-GC8-FC1K" notation: GCn is a graph convolution
// with n feature maps, FCn a hidden fully connected layer with n units (a
// trailing K multiplies by 1000). The softmax output layer is implicit.
struct Architecture {
  std::vector<std::size_t> conv_maps;
  std::vector<std::size_t> hidden_units;

  // Throws ConfigError. At least one GC token is required and every GC
  // token must precede every FC token.
  static Architecture Parse(std::string_view text);
  std::string ToString() const;
};

enum class FilterKind : uint8_t { kFree = 0, kPolynomial = 1 };

// Spectral filter bank from in_maps to out_maps feature maps acting on the
// first basis_dim basis columns. Column i * out_maps + j of `filters` holds
// the (i, j) filter: basis_dim free multipliers or degree + 1 polynomial
// coefficients.
struct GraphConvLayer {
  std::size_t in_maps = 1;
  std::size_t out_maps = 1;
  std::size_t basis_dim = 0;
  FilterKind kind = FilterKind::kFree;
  std::size_t degree = 0;
  Eigen::MatrixXd filters;
};

struct ModelConfig {
  Architecture arch;
  std::size_t kernel_degree = kDefaultKernelDegree;
  // Truncation pooling: each GC layer keeps half the spectrum of the one
  // before it.
  bool pooling = true;
};

struct ScnnModel {
  Architecture arch;
  std::shared_ptr<const SpectralBasis> basis;
  std::vector<GraphConvLayer> conv;
  // Hidden layers, then the output layer.
  std::vector<DenseLayer> fc;
  std::size_t kernel_degree = kDefaultKernelDegree;
  bool pooling = true;

  std::size_t nodes() const { return basis ? basis->nodes() : 0; }
  int num_classes() const { return fc.empty() ? 0 : static_cast<int>(fc.back().outputs()); }
  std::size_t feature_size() const { return nodes() * (conv.empty() ? 1 : conv.back().out_maps); }
};

// Spectral size used by each GC layer.
std::vector<std::size_t> ConvBasisDims(std::size_t dim, std::size_t layers, bool pooling);

// Polynomial filters when basis_dim > kernel_degree + 1, free multipliers
// otherwise. Filters and hidden weights are uniform in +-1/sqrt(fan_in);
// the output layer starts at zero.
ScnnModel InitModel(std::shared_ptr<const SpectralBasis> basis, int num_classes,
                    const ModelConfig& config, uint64_t seed);

// Re-initializes every fully connected layer for a new class count and the
// current feature size.
void ReinitHead(ScnnModel& model, int num_classes, uint64_t seed);

// basis_dim x (in_maps * out_maps) multipliers of a layer.
Eigen::MatrixXd LayerMultipliers(const GraphConvLayer& layer, const SpectralBasis& basis);

// One document: x is nodes x in_maps, the result nodes x out_maps.
Eigen::MatrixXd ConvForward(const GraphConvLayer& layer, const SpectralBasis& basis,
                            const Eigen::MatrixXd& x);

// Class probabilities of one signal.
Eigen::VectorXd Forward(const ScnnModel& model, const Eigen::VectorXd& x);
// Column-wise probabilities for a batch of signals.
Eigen::MatrixXd ForwardBatch(const ScnnModel& model, const Eigen::MatrixXd& signals);

// Flattened output of the conv stack, (nodes * maps) x batch, map-major.
Eigen::MatrixXd ConvFeatures(const ScnnModel& model, const Eigen::MatrixXd& signals);

double Loss(const Eigen::VectorXd& probs, int label);

struct ModelGradients {
  std::vector<Eigen::MatrixXd> conv;
  std::vector<Eigen::MatrixXd> fc_weights;
  std::vector<Eigen::VectorXd> fc_bias;
};

// Exact gradients of the cross-entropy loss for one document.
ModelGradients Backward(const ScnnModel& model, const Eigen::VectorXd& x, int label);

struct BatchResult {
  ModelGradients grads;  // mean over the batch
  double loss_sum = 0.0;
  std::size_t correct = 0;
};

// Mean gradients over a batch. With conv_grads false the conv stack is
// treated as constant and its gradients are left empty.
BatchResult BackwardBatch(const ScnnModel& model, const Eigen::MatrixXd& signals,
                          std::span<const int> labels, bool conv_grads = true);
// Same, starting from precomputed ConvFeatures.
BatchResult HeadBackwardBatch(const ScnnModel& model, const Eigen::MatrixXd& features,
                              std::span<const int> labels);

// Parameter blocks in declaration order: gc0.filters, gc1.filters, ...,
// fc0.weights, fc0.bias, ...
std::vector<std::string> BlockNames(const ScnnModel& model);
std::vector<std::span<double>> ParameterBlocks(ScnnModel& model);
std::vector<std::span<const double>> ParameterBlocks(const ScnnModel& model);
std::vector<std::span<const double>> GradientBlocks(const ModelGradients& grads);
// Layer identifier ("gc0", "fc1", ...) owning each block.
std::vector<std::string> BlockLayers(const ScnnModel& model);
std::vector<std::string> LayerNames(const ScnnModel& model);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = kDefaultLearningRate;
  double damping = 1e-8;
  uint64_t seed = 0;
  double val_fraction = 0.0;
  // Layer identifiers whose parameters stay fixed.
  std::set<std::string> frozen;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
  uint64_t eig_count = 0;
};

struct TrainReport {
  std::vector<EpochRecord> records;
  uint64_t eig_count = 0;  // decompositions performed during training
  double seconds = 0.0;
  bool diverged = false;
  std::size_t last_good_epoch = 0;
  std::string message;
};

using EpochCallback = std::function<void(const ScnnModel&, std::size_t epoch, TrainReport&)>;

// Mini-batch AdaGrad on mean cross-entropy. Deterministic given the seed.
// On a non-finite loss the parameters of the last finished epoch are
// restored and the report is marked diverged. The "train" records carry the
// running mean loss and accuracy over the epoch's batches.
TrainReport Train(ScnnModel& model, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  // confusion[true][predicted].
  std::vector<std::vector<std::size_t>> confusion;
};

// Throws DataError on an empty dataset.
Evaluation Evaluate(const ScnnModel& model, const Dataset& data);
Evaluation EvaluateFeatures(const ScnnModel& model, const Eigen::MatrixXd& features,
                            std::span<const int> labels);

// "SCNNCKP1" | u32 version | arch string | u64 basis checksum | u64 nodes |
// u32 classes | u32 kernel degree | u8 pooling | conv layer shapes | dense
// layer shapes | parameter blocks in declaration order | u64 checksum.
std::string SerializeCheckpoint(const ScnnModel& model);
ScnnModel DeserializeCheckpoint(const std::string& bytes,
                                std::shared_ptr<const SpectralBasis> basis);
void SaveCheckpoint(const ScnnModel& model, const std::string& path);
ScnnModel LoadCheckpoint(const std::string& path, std::shared_ptr<const SpectralBasis> basis);

// CSV with columns epoch,split,loss,accuracy,seconds,eig_count, preceded by
// "# key=value" header lines. Timings are written only when with_timing is
// set; otherwise the seconds column is 0 so reruns are byte-identical.
std::string ReportCsv(const TrainReport& report,
                      const std::vector<std::pair<std::string, std::string>>& header,
                      bool with_timing);

}  // namespace scnn

#endif  // SCNN_NETWORK_H_
