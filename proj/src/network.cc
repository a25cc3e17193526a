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

#include "scnn/network.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "scnn/error.h"
#include "scnn/io.h"
#include "scnn/random.h"

namespace scnn {
namespace {

constexpr char kCheckpointMagic[] = "SCNNCKP1";
constexpr uint32_t kCheckpointVersion = 1;
constexpr Eigen::Index kEvalChunk = 512;

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Intermediate values of one forward pass kept for backpropagation.
struct Pass {
  std::vector<Eigen::MatrixXd> multipliers;
  std::vector<std::vector<Eigen::MatrixXd>> spectral;  // [layer][in map], d x B
  std::vector<std::vector<Eigen::MatrixXd>> pre;       // [layer][out map], N x B
  std::vector<Eigen::MatrixXd> dense_in;
  std::vector<Eigen::MatrixXd> dense_pre;
  Eigen::MatrixXd probs;
};

void RequireFinite(const Eigen::MatrixXd& m, const std::string& layer) {
  if (!m.allFinite()) throw NumericError("non-finite activation in layer " + layer);
}

Eigen::MatrixXd Vandermonde(const SpectralBasis& basis, std::size_t dim, std::size_t degree) {
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd v(d, static_cast<Eigen::Index>(degree + 1));
  const Eigen::VectorXd points = basis.eigenvalues.head(d) / basis.scale;
  v.col(0).setOnes();
  for (Eigen::Index k = 1; k < v.cols(); ++k) v.col(k) = v.col(k - 1).cwiseProduct(points);
  return v;
}

void CheckLayer(const GraphConvLayer& layer, const SpectralBasis& basis) {
  if (layer.basis_dim == 0 || layer.basis_dim > basis.dim()) {
    throw DataError("layer spectral size " + std::to_string(layer.basis_dim) +
                    " exceeds basis dimension " + std::to_string(basis.dim()));
  }
  const std::size_t rows = layer.kind == FilterKind::kFree ? layer.basis_dim : layer.degree + 1;
  if (static_cast<std::size_t>(layer.filters.rows()) != rows ||
      static_cast<std::size_t>(layer.filters.cols()) != layer.in_maps * layer.out_maps) {
    throw DataError("filter bank shape does not match layer");
  }
}

// Applies one GC layer to a batch. Fills the cache when given.
std::vector<Eigen::MatrixXd> ConvLayerForward(const GraphConvLayer& layer,
                                              const SpectralBasis& basis,
                                              const std::vector<Eigen::MatrixXd>& in,
                                              Eigen::MatrixXd* multipliers_out,
                                              std::vector<Eigen::MatrixXd>* spectral_out,
                                              std::vector<Eigen::MatrixXd>* pre_out) {
  CheckLayer(layer, basis);
  if (in.size() != layer.in_maps) throw DataError("layer input has the wrong number of maps");
  const auto d = static_cast<Eigen::Index>(layer.basis_dim);
  const auto u = basis.eigenvectors.leftCols(d);
  Eigen::MatrixXd mult = LayerMultipliers(layer, basis);

  std::vector<Eigen::MatrixXd> spectral(layer.in_maps);
  for (std::size_t i = 0; i < layer.in_maps; ++i) {
    if (static_cast<std::size_t>(in[i].rows()) != basis.nodes()) {
      throw DataError("signal length " + std::to_string(in[i].rows()) +
                      " does not match " + std::to_string(basis.nodes()) + " nodes");
    }
    spectral[i].noalias() = u.transpose() * in[i];
  }
  const Eigen::Index batch = in.front().cols();
  std::vector<Eigen::MatrixXd> out(layer.out_maps);
  std::vector<Eigen::MatrixXd> pre(layer.out_maps);
  Eigen::MatrixXd z(d, batch);
  for (std::size_t j = 0; j < layer.out_maps; ++j) {
    z.setZero();
    for (std::size_t i = 0; i < layer.in_maps; ++i) {
      const auto g = mult.col(static_cast<Eigen::Index>(i * layer.out_maps + j));
      z.array() += spectral[i].array().colwise() * g.array();
    }
    pre[j].noalias() = u * z;
    out[j] = pre[j].cwiseMax(0.0);
  }
  if (multipliers_out) *multipliers_out = std::move(mult);
  if (spectral_out) *spectral_out = std::move(spectral);
  if (pre_out) *pre_out = std::move(pre);
  return out;
}

Eigen::MatrixXd Flatten(const std::vector<Eigen::MatrixXd>& maps) {
  const Eigen::Index n = maps.front().rows();
  Eigen::MatrixXd f(n * static_cast<Eigen::Index>(maps.size()), maps.front().cols());
  for (std::size_t j = 0; j < maps.size(); ++j) f.middleRows(static_cast<Eigen::Index>(j) * n, n) = maps[j];
  return f;
}

Eigen::MatrixXd ConvStackForward(const ScnnModel& model, const Eigen::MatrixXd& signals, Pass* pass) {
  if (static_cast<std::size_t>(signals.rows()) != model.nodes()) {
    throw DataError("signal length " + std::to_string(signals.rows()) + " does not match model with " +
                    std::to_string(model.nodes()) + " nodes");
  }
  std::vector<Eigen::MatrixXd> maps{signals};
  if (pass) {
    pass->multipliers.resize(model.conv.size());
    pass->spectral.resize(model.conv.size());
    pass->pre.resize(model.conv.size());
  }
  for (std::size_t k = 0; k < model.conv.size(); ++k) {
    maps = ConvLayerForward(model.conv[k], *model.basis, maps,
                            pass ? &pass->multipliers[k] : nullptr,
                            pass ? &pass->spectral[k] : nullptr,
                            pass ? &pass->pre[k] : nullptr);
    for (const auto& m : maps) RequireFinite(m, "gc" + std::to_string(k));
  }
  return Flatten(maps);
}

Eigen::MatrixXd HeadForward(const ScnnModel& model, const Eigen::MatrixXd& features, Pass* pass) {
  if (model.fc.empty() || static_cast<std::size_t>(features.rows()) != model.fc.front().inputs()) {
    throw DataError("feature size does not match the classifier head");
  }
  Eigen::MatrixXd a = features;
  if (pass) {
    pass->dense_in.resize(model.fc.size());
    pass->dense_pre.resize(model.fc.size());
  }
  for (std::size_t l = 0; l < model.fc.size(); ++l) {
    Eigen::MatrixXd pre = (model.fc[l].weights * a).colwise() + model.fc[l].bias;
    RequireFinite(pre, "fc" + std::to_string(l));
    if (pass) {
      pass->dense_in[l] = a;
      pass->dense_pre[l] = pre;
    }
    a = l + 1 < model.fc.size() ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : Softmax(pre);
  }
  if (pass) pass->probs = a;
  return a;
}

// Fills head gradients (mean over batch) and returns d loss / d features.
Eigen::MatrixXd HeadBackward(const ScnnModel& model, const Pass& pass,
                             std::span<const int> labels, ModelGradients& grads,
                             bool need_input_grad) {
  const auto batch = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd delta = pass.probs;
  for (Eigen::Index b = 0; b < batch; ++b) delta(labels[static_cast<std::size_t>(b)], b) -= 1.0;
  delta /= static_cast<double>(batch);

  grads.fc_weights.resize(model.fc.size());
  grads.fc_bias.resize(model.fc.size());
  for (std::size_t l = model.fc.size(); l-- > 0;) {
    grads.fc_weights[l].noalias() = delta * pass.dense_in[l].transpose();
    grads.fc_bias[l] = delta.rowwise().sum();
    if (l == 0 && !need_input_grad) return {};
    Eigen::MatrixXd back = model.fc[l].weights.transpose() * delta;
    if (l == 0) return back;
    delta = back.cwiseProduct((pass.dense_pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return {};
}

void ConvBackward(const ScnnModel& model, const Pass& pass, const Eigen::MatrixXd& dfeatures,
                  ModelGradients& grads) {
  const auto n = static_cast<Eigen::Index>(model.nodes());
  const GraphConvLayer& last = model.conv.back();
  std::vector<Eigen::MatrixXd> dout(last.out_maps);
  for (std::size_t j = 0; j < last.out_maps; ++j) dout[j] = dfeatures.middleRows(static_cast<Eigen::Index>(j) * n, n);

  grads.conv.resize(model.conv.size());
  for (std::size_t k = model.conv.size(); k-- > 0;) {
    const GraphConvLayer& layer = model.conv[k];
    const auto d = static_cast<Eigen::Index>(layer.basis_dim);
    const auto u = model.basis->eigenvectors.leftCols(d);
    const Eigen::MatrixXd& mult = pass.multipliers[k];
    Eigen::MatrixXd dmult = Eigen::MatrixXd::Zero(d, mult.cols());
    std::vector<Eigen::MatrixXd> dspectral;
    if (k > 0) dspectral.assign(layer.in_maps, Eigen::MatrixXd::Zero(d, dout.front().cols()));
    for (std::size_t j = 0; j < layer.out_maps; ++j) {
      Eigen::MatrixXd dpre = dout[j].cwiseProduct((pass.pre[k][j].array() > 0.0).cast<double>().matrix());
      Eigen::MatrixXd dz = u.transpose() * dpre;
      for (std::size_t i = 0; i < layer.in_maps; ++i) {
        const auto col = static_cast<Eigen::Index>(i * layer.out_maps + j);
        dmult.col(col) = dz.cwiseProduct(pass.spectral[k][i]).rowwise().sum();
        if (k > 0) dspectral[i].array() += dz.array().colwise() * mult.col(col).array();
      }
    }
    if (layer.kind == FilterKind::kFree) {
      grads.conv[k] = std::move(dmult);
    } else {
      grads.conv[k] = Vandermonde(*model.basis, layer.basis_dim, layer.degree).transpose() * dmult;
    }
    if (k > 0) {
      dout.assign(layer.in_maps, Eigen::MatrixXd());
      for (std::size_t i = 0; i < layer.in_maps; ++i) dout[i] = u * dspectral[i];
    }
  }
}

void AccumulateStats(const Eigen::MatrixXd& probs, std::span<const int> labels, BatchResult& r) {
  for (Eigen::Index b = 0; b < probs.cols(); ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    r.loss_sum += CrossEntropy(probs.col(b), label);
    r.correct += Argmax(probs.col(b)) == label;
  }
}

void CheckGradients(const ModelGradients& grads, const std::vector<std::string>& names) {
  const auto blocks = GradientBlocks(grads);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (double v : blocks[b]) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite gradient in block " + (b < names.size() ? names[b] : std::to_string(b)));
      }
    }
  }
}

std::vector<std::string> HeadBlockNames(std::size_t fc_layers) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < fc_layers; ++l) {
    names.push_back("fc" + std::to_string(l) + ".weights");
    names.push_back("fc" + std::to_string(l) + ".bias");
  }
  return names;
}

Eigen::MatrixXd GatherColumns(const Eigen::MatrixXd& m, std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

std::size_t ParseCount(std::string_view digits, std::string_view token) {
  if (digits.empty()) throw ConfigError("architecture token '" + std::string(token) + "' lacks a size");
  std::size_t multiplier = 1;
  if (digits.back() == 'K' || digits.back() == 'k') {
    multiplier = 1000;
    digits.remove_suffix(1);
  }
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ConfigError("architecture token '" + std::string(token) + "' has a malformed size");
  }
  const std::size_t value = std::stoul(std::string(digits)) * multiplier;
  if (value == 0) throw ConfigError("architecture token '" + std::string(token) + "' has size zero");
  return value;
}

}  // namespace

Architecture Architecture::Parse(std::string_view text) {
  Architecture arch;
  if (text.empty()) throw ConfigError("empty architecture string");
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t dash = text.find('-', start);
    const std::string_view token = text.substr(start, dash == std::string_view::npos ? std::string_view::npos : dash - start);
    if (token.size() < 3) throw ConfigError("malformed architecture token '" + std::string(token) + "'");
    const std::string_view kind = token.substr(0, 2);
    if (kind == "GC") {
      if (!arch.hidden_units.empty()) throw ConfigError("GC layers must precede FC layers");
      arch.conv_maps.push_back(ParseCount(token.substr(2), token));
    } else if (kind == "FC") {
      arch.hidden_units.push_back(ParseCount(token.substr(2), token));
    } else {
      throw ConfigError("unknown architecture token '" + std::string(token) + "'");
    }
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  if (arch.conv_maps.empty()) throw ConfigError("architecture needs at least one GC layer");
  return arch;
}

std::string Architecture::ToString() const {
  std::string s;
  auto append = [&s](const std::string& part) {
    if (!s.empty()) s.push_back('-');
    s += part;
  };
  for (std::size_t m : conv_maps) append("GC" + std::to_string(m));
  for (std::size_t h : hidden_units) {
    append(h % 1000 == 0 ? "FC" + std::to_string(h / 1000) + "K" : "FC" + std::to_string(h));
  }
  return s;
}

std::vector<std::size_t> ConvBasisDims(std::size_t dim, std::size_t layers, bool pooling) {
  std::vector<std::size_t> dims;
  std::size_t d = dim;
  for (std::size_t k = 0; k < layers; ++k) {
    dims.push_back(d);
    if (pooling) d = std::max<std::size_t>(1, d / 2);
  }
  return dims;
}

ScnnModel InitModel(std::shared_ptr<const SpectralBasis> basis, int num_classes,
                    const ModelConfig& config, uint64_t seed) {
  if (!basis) throw DataError("model needs a spectral basis");
  if (num_classes < 1) throw DataError("model needs at least one class");
  ScnnModel model;
  model.arch = config.arch;
  model.basis = std::move(basis);
  model.kernel_degree = config.kernel_degree;
  model.pooling = config.pooling;

  Rng rng = Rng::Stream(seed, "conv-init");
  const auto dims = ConvBasisDims(model.basis->dim(), config.arch.conv_maps.size(), config.pooling);
  std::size_t in_maps = 1;
  for (std::size_t k = 0; k < config.arch.conv_maps.size(); ++k) {
    GraphConvLayer layer;
    layer.in_maps = in_maps;
    layer.out_maps = config.arch.conv_maps[k];
    layer.basis_dim = dims[k];
    const bool polynomial = layer.basis_dim > config.kernel_degree + 1;
    layer.kind = polynomial ? FilterKind::kPolynomial : FilterKind::kFree;
    layer.degree = polynomial ? config.kernel_degree : 0;
    const std::size_t rows = polynomial ? config.kernel_degree + 1 : layer.basis_dim;
    const double fan_in = static_cast<double>(in_maps * (polynomial ? rows : 1));
    const double scale = 1.0 / std::sqrt(fan_in);
    layer.filters.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in_maps * layer.out_maps));
    for (Eigen::Index c = 0; c < layer.filters.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.filters.rows(); ++r) layer.filters(r, c) = rng.Uniform(-scale, scale);
    }
    model.conv.push_back(std::move(layer));
    in_maps = config.arch.conv_maps[k];
  }
  ReinitHead(model, num_classes, seed);
  return model;
}

void ReinitHead(ScnnModel& model, int num_classes, uint64_t seed) {
  Rng rng = Rng::Stream(seed, "head-init");
  model.fc.clear();
  std::size_t inputs = model.feature_size();
  for (std::size_t h : model.arch.hidden_units) {
    model.fc.push_back(InitDense(h, inputs, rng));
    inputs = h;
  }
  model.fc.push_back(InitDense(static_cast<std::size_t>(num_classes), inputs, rng, /*zero_init=*/true));
}

Eigen::MatrixXd LayerMultipliers(const GraphConvLayer& layer, const SpectralBasis& basis) {
  if (layer.kind == FilterKind::kFree) return layer.filters;
  const auto d = static_cast<Eigen::Index>(layer.basis_dim);
  const Eigen::VectorXd points = basis.eigenvalues.head(d) / basis.scale;
  Eigen::MatrixXd mult(d, layer.filters.cols());
  for (Eigen::Index c = 0; c < layer.filters.cols(); ++c) {
    mult.col(c) = HornerEvaluate(points, std::span<const double>(layer.filters.col(c).data(),
                                                                 static_cast<std::size_t>(layer.filters.rows())));
  }
  return mult;
}

Eigen::MatrixXd ConvForward(const GraphConvLayer& layer, const SpectralBasis& basis,
                            const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != layer.in_maps) throw DataError("input block has the wrong number of maps");
  std::vector<Eigen::MatrixXd> in;
  for (Eigen::Index i = 0; i < x.cols(); ++i) in.emplace_back(x.col(i));
  const auto out = ConvLayerForward(layer, basis, in, nullptr, nullptr, nullptr);
  Eigen::MatrixXd y(x.rows(), static_cast<Eigen::Index>(out.size()));
  for (std::size_t j = 0; j < out.size(); ++j) y.col(static_cast<Eigen::Index>(j)) = out[j];
  return y;
}

Eigen::VectorXd Forward(const ScnnModel& model, const Eigen::VectorXd& x) {
  return ForwardBatch(model, x);
}

Eigen::MatrixXd ForwardBatch(const ScnnModel& model, const Eigen::MatrixXd& signals) {
  return HeadForward(model, ConvStackForward(model, signals, nullptr), nullptr);
}

Eigen::MatrixXd ConvFeatures(const ScnnModel& model, const Eigen::MatrixXd& signals) {
  Eigen::MatrixXd features(static_cast<Eigen::Index>(model.feature_size()), signals.cols());
  for (Eigen::Index start = 0; start < signals.cols(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, signals.cols() - start);
    features.middleCols(start, len) = ConvStackForward(model, signals.middleCols(start, len), nullptr);
  }
  return features;
}

double Loss(const Eigen::VectorXd& probs, int label) {
  if (label < 0 || label >= probs.size()) throw DataError("label out of range");
  return CrossEntropy(probs, label);
}

ModelGradients Backward(const ScnnModel& model, const Eigen::VectorXd& x, int label) {
  const int labels[] = {label};
  return BackwardBatch(model, x, labels).grads;
}

BatchResult BackwardBatch(const ScnnModel& model, const Eigen::MatrixXd& signals,
                          std::span<const int> labels, bool conv_grads) {
  if (static_cast<std::size_t>(signals.cols()) != labels.size() || labels.empty()) {
    throw DataError("batch needs one label per signal");
  }
  for (int l : labels) {
    if (l < 0 || l >= model.num_classes()) throw DataError("label out of range");
  }
  Pass pass;
  const Eigen::MatrixXd features = ConvStackForward(model, signals, conv_grads ? &pass : nullptr);
  HeadForward(model, features, &pass);
  BatchResult result;
  AccumulateStats(pass.probs, labels, result);
  Eigen::MatrixXd dfeatures = HeadBackward(model, pass, labels, result.grads, conv_grads);
  if (conv_grads) ConvBackward(model, pass, dfeatures, result.grads);
  CheckGradients(result.grads, BlockNames(model));
  return result;
}

BatchResult HeadBackwardBatch(const ScnnModel& model, const Eigen::MatrixXd& features,
                              std::span<const int> labels) {
  if (static_cast<std::size_t>(features.cols()) != labels.size() || labels.empty()) {
    throw DataError("batch needs one label per feature column");
  }
  Pass pass;
  HeadForward(model, features, &pass);
  BatchResult result;
  AccumulateStats(pass.probs, labels, result);
  HeadBackward(model, pass, labels, result.grads, false);
  CheckGradients(result.grads, HeadBlockNames(model.fc.size()));
  return result;
}

std::vector<std::string> BlockNames(const ScnnModel& model) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < model.conv.size(); ++k) names.push_back("gc" + std::to_string(k) + ".filters");
  for (auto& n : HeadBlockNames(model.fc.size())) names.push_back(std::move(n));
  return names;
}

std::vector<std::string> BlockLayers(const ScnnModel& model) {
  std::vector<std::string> layers;
  for (std::size_t k = 0; k < model.conv.size(); ++k) layers.push_back("gc" + std::to_string(k));
  for (std::size_t l = 0; l < model.fc.size(); ++l) {
    layers.push_back("fc" + std::to_string(l));
    layers.push_back("fc" + std::to_string(l));
  }
  return layers;
}

std::vector<std::string> LayerNames(const ScnnModel& model) {
  std::vector<std::string> layers;
  for (std::size_t k = 0; k < model.conv.size(); ++k) layers.push_back("gc" + std::to_string(k));
  for (std::size_t l = 0; l < model.fc.size(); ++l) layers.push_back("fc" + std::to_string(l));
  return layers;
}

namespace {

template <typename Double, typename Model>
std::vector<std::span<Double>> Blocks(Model& model) {
  std::vector<std::span<Double>> blocks;
  for (auto& layer : model.conv) blocks.emplace_back(layer.filters.data(), static_cast<std::size_t>(layer.filters.size()));
  for (auto& layer : model.fc) {
    blocks.emplace_back(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
    blocks.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  return blocks;
}

}  // namespace

std::vector<std::span<double>> ParameterBlocks(ScnnModel& model) { return Blocks<double>(model); }

std::vector<std::span<const double>> ParameterBlocks(const ScnnModel& model) {
  return Blocks<const double>(model);
}

std::vector<std::span<const double>> GradientBlocks(const ModelGradients& grads) {
  std::vector<std::span<const double>> blocks;
  for (const auto& g : grads.conv) blocks.emplace_back(g.data(), static_cast<std::size_t>(g.size()));
  for (std::size_t l = 0; l < grads.fc_weights.size(); ++l) {
    blocks.emplace_back(grads.fc_weights[l].data(), static_cast<std::size_t>(grads.fc_weights[l].size()));
    blocks.emplace_back(grads.fc_bias[l].data(), static_cast<std::size_t>(grads.fc_bias[l].size()));
  }
  return blocks;
}

TrainReport Train(ScnnModel& model, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  TrainReport report;
  if (config.epochs == 0) return report;
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (config.val_fraction < 0.0 || config.val_fraction >= 1.0) throw ConfigError("validation fraction must lie in [0, 1)");
  if (data.size() == 0) throw DataError("no training documents");
  if (data.nodes() != model.nodes()) {
    throw DataError("corpus signals have " + std::to_string(data.nodes()) + " nodes, basis has " +
                    std::to_string(model.nodes()));
  }
  const auto layer_names = LayerNames(model);
  for (const std::string& f : config.frozen) {
    if (std::find(layer_names.begin(), layer_names.end(), f) == layer_names.end()) {
      throw ConfigError("frozen layer '" + f + "' does not exist");
    }
  }

  const auto start_time = Clock::now();
  const uint64_t eig_before = EigendecompositionCount();

  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> train_idx = all, val_idx;
  if (config.val_fraction > 0.0) {
    Rng split = Rng::Stream(config.seed, "validation");
    split.Shuffle(all);
    auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(all.size())));
    n_val = std::min(n_val, all.size() - 1);
    val_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.assign(all.begin() + static_cast<std::ptrdiff_t>(n_val), all.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }
  Dataset val;
  if (!val_idx.empty()) {
    val.signals = GatherColumns(data.signals, val_idx);
    for (std::size_t i : val_idx) val.labels.push_back(data.labels[i]);
    val.num_classes = data.num_classes;
  }

  const auto block_layers = BlockLayers(model);
  std::vector<bool> trainable(block_layers.size());
  for (std::size_t b = 0; b < block_layers.size(); ++b) trainable[b] = !config.frozen.count(block_layers[b]);
  bool conv_frozen = true;
  for (std::size_t k = 0; k < model.conv.size(); ++k) conv_frozen = conv_frozen && config.frozen.count("gc" + std::to_string(k));

  // A frozen conv stack is a fixed feature map; compute it once.
  Eigen::MatrixXd cached;
  if (conv_frozen) cached = ConvFeatures(model, data.signals);

  AdaGradState state;
  state.learning_rate = config.learning_rate;
  state.damping = config.damping;
  Rng shuffle = Rng::Stream(config.seed, "shuffle");
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    const std::vector<GraphConvLayer> conv_snapshot = model.conv;
    const std::vector<DenseLayer> fc_snapshot = model.fc;
    shuffle.Shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    bool finite = true;
    try {
      for (std::size_t s = 0; s < train_idx.size(); s += config.batch_size) {
        const std::size_t e = std::min(train_idx.size(), s + config.batch_size);
        const std::span<const std::size_t> cols(train_idx.data() + s, e - s);
        batch_labels.clear();
        for (std::size_t i : cols) batch_labels.push_back(data.labels[i]);

        BatchResult r = conv_frozen ? HeadBackwardBatch(model, GatherColumns(cached, cols), batch_labels)
                                    : BackwardBatch(model, GatherColumns(data.signals, cols), batch_labels);
        loss_sum += r.loss_sum;
        correct += r.correct;
        // Frozen conv blocks have no gradient; the mask skips them.
        r.grads.conv.resize(model.conv.size());
        AdaGradStep(state, ParameterBlocks(model), GradientBlocks(r.grads), trainable);
      }
    } catch (const NumericError& e) {
      finite = false;
      report.message = e.what();
    }
    for (const auto& block : ParameterBlocks(static_cast<const ScnnModel&>(model))) {
      for (double v : block) finite = finite && std::isfinite(v);
    }
    if (!finite || !std::isfinite(loss_sum)) {
      model.conv = conv_snapshot;
      model.fc = fc_snapshot;
      report.diverged = true;
      if (report.message.empty()) report.message = "non-finite loss in epoch " + std::to_string(epoch);
      break;
    }
    report.last_good_epoch = epoch;
    const double n = static_cast<double>(train_idx.size());
    report.records.push_back({epoch, "train", loss_sum / n, static_cast<double>(correct) / n,
                              SecondsSince(epoch_start), EigendecompositionCount() - eig_before});
    if (!val_idx.empty()) {
      const Evaluation ev = Evaluate(model, val);
      report.records.push_back({epoch, "val", ev.mean_loss, ev.accuracy, SecondsSince(epoch_start),
                                EigendecompositionCount() - eig_before});
    }
    if (on_epoch) on_epoch(model, epoch, report);
  }
  report.eig_count = EigendecompositionCount() - eig_before;
  report.seconds = SecondsSince(start_time);
  return report;
}

Evaluation EvaluateFeatures(const ScnnModel& model, const Eigen::MatrixXd& features,
                            std::span<const int> labels) {
  if (labels.empty()) throw DataError("cannot evaluate on an empty corpus");
  const auto classes = static_cast<std::size_t>(model.num_classes());
  Evaluation ev;
  ev.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  double loss = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index start = 0; start < features.cols(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, features.cols() - start);
    const Eigen::MatrixXd probs = HeadForward(model, features.middleCols(start, len), nullptr);
    for (Eigen::Index b = 0; b < len; ++b) {
      const int label = labels[static_cast<std::size_t>(start + b)];
      if (label < 0 || static_cast<std::size_t>(label) >= classes) throw DataError("label out of range");
      const int predicted = Argmax(probs.col(b));
      loss += CrossEntropy(probs.col(b), label);
      correct += predicted == label;
      ++ev.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(predicted)];
    }
  }
  const double n = static_cast<double>(labels.size());
  ev.accuracy = static_cast<double>(correct) / n;
  ev.mean_loss = loss / n;
  return ev;
}

Evaluation Evaluate(const ScnnModel& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("cannot evaluate on an empty corpus");
  return EvaluateFeatures(model, ConvFeatures(model, data.signals), data.labels);
}

std::string SerializeCheckpoint(const ScnnModel& model) {
  ByteWriter w;
  w.Bytes(std::string_view(kCheckpointMagic, 8));
  w.U32(kCheckpointVersion);
  w.String(model.arch.ToString());
  w.U64(BasisChecksum(*model.basis));
  w.U64(model.nodes());
  w.U32(static_cast<uint32_t>(model.num_classes()));
  w.U32(static_cast<uint32_t>(model.kernel_degree));
  w.U8(model.pooling ? 1 : 0);
  w.U32(static_cast<uint32_t>(model.conv.size()));
  for (const auto& layer : model.conv) {
    w.U64(layer.in_maps);
    w.U64(layer.out_maps);
    w.U64(layer.basis_dim);
    w.U8(static_cast<uint8_t>(layer.kind));
    w.U64(layer.degree);
    w.U64(static_cast<uint64_t>(layer.filters.rows()));
  }
  w.U32(static_cast<uint32_t>(model.fc.size()));
  for (const auto& layer : model.fc) {
    w.U64(layer.outputs());
    w.U64(layer.inputs());
  }
  for (const auto& block : ParameterBlocks(model)) w.F64s(block);
  w.U64(Fnv1a64(w.buffer()));
  return w.buffer();
}

ScnnModel DeserializeCheckpoint(const std::string& bytes, std::shared_ptr<const SpectralBasis> basis) {
  if (!basis) throw DataError("checkpoint needs a spectral basis");
  if (bytes.size() < 16) throw DataError("checkpoint too short");
  const std::string_view payload(bytes.data(), bytes.size() - 8);
  if (ByteReader(std::string_view(bytes).substr(bytes.size() - 8)).U64() != Fnv1a64(payload)) {
    throw DataError("checkpoint checksum mismatch");
  }
  ByteReader r(payload);
  if (r.Bytes(8) != std::string_view(kCheckpointMagic, 8)) throw DataError("not a checkpoint file");
  if (r.U32() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
  ScnnModel model;
  model.arch = Architecture::Parse(r.String());
  if (r.U64() != BasisChecksum(*basis)) throw DataError("checkpoint was trained on a different basis");
  if (r.U64() != basis->nodes()) throw DataError("checkpoint node count does not match basis");
  model.basis = std::move(basis);
  const uint32_t classes = r.U32();
  model.kernel_degree = r.U32();
  model.pooling = r.U8() != 0;
  const uint32_t n_conv = r.U32();
  if (n_conv != model.arch.conv_maps.size()) throw DataError("checkpoint conv layers do not match architecture");
  for (uint32_t k = 0; k < n_conv; ++k) {
    GraphConvLayer layer;
    layer.in_maps = r.U64();
    layer.out_maps = r.U64();
    layer.basis_dim = r.U64();
    const uint8_t kind = r.U8();
    if (kind > 1) throw DataError("unknown filter kind in checkpoint");
    layer.kind = static_cast<FilterKind>(kind);
    layer.degree = r.U64();
    const uint64_t rows = r.U64();
    layer.filters.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(layer.in_maps * layer.out_maps));
    CheckLayer(layer, *model.basis);
    model.conv.push_back(std::move(layer));
  }
  const uint32_t n_fc = r.U32();
  if (n_fc != model.arch.hidden_units.size() + 1) throw DataError("checkpoint dense layers do not match architecture");
  for (uint32_t l = 0; l < n_fc; ++l) {
    DenseLayer layer;
    const uint64_t rows = r.U64();
    const uint64_t cols = r.U64();
    layer.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    layer.bias.resize(static_cast<Eigen::Index>(rows));
    model.fc.push_back(std::move(layer));
  }
  if (model.fc.back().outputs() != classes) throw DataError("checkpoint class count mismatch");
  for (auto block : ParameterBlocks(model)) r.F64s(block);
  if (r.remaining() != 0) throw DataError("trailing bytes in checkpoint");
  return model;
}

void SaveCheckpoint(const ScnnModel& model, const std::string& path) {
  WriteFileAtomic(path, SerializeCheckpoint(model));
}

ScnnModel LoadCheckpoint(const std::string& path, std::shared_ptr<const SpectralBasis> basis) {
  return DeserializeCheckpoint(ReadFile(path), std::move(basis));
}

std::string ReportCsv(const TrainReport& report,
                      const std::vector<std::pair<std::string, std::string>>& header,
                      bool with_timing) {
  std::string out;
  for (const auto& [k, v] : header) out += "# " + k + "=" + v + "\n";
  out += "epoch,split,loss,accuracy,seconds,eig_count\n";
  char line[256];
  for (const EpochRecord& r : report.records) {
    std::snprintf(line, sizeof line, "%zu,%s,%.12g,%.12g,%.6f,%llu\n", r.epoch, r.split.c_str(), r.loss,
                  r.accuracy, with_timing ? r.seconds : 0.0, static_cast<unsigned long long>(r.eig_count));
    out += line;
  }
  return out;
}

}  // namespace scnn
