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

#include "scnn/graph.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "scnn/dense.h"
#include "scnn/error.h"
#include "scnn/io.h"
#include "scnn/random.h"

namespace scnn {

std::size_t Graph::EdgeCount() const {
  std::size_t m = 0;
  for (Eigen::Index j = 1; j < adjacency.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) m += adjacency(i, j) != 0.0;
  }
  return m;
}

void ValidateGraph(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  if (g.adjacency.rows() != n || g.adjacency.cols() != n) {
    throw DataError("adjacency is " + std::to_string(g.adjacency.rows()) + "x" +
                    std::to_string(g.adjacency.cols()) + " for " +
                    std::to_string(n) + " words");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g.adjacency(i, i) != 0.0) throw DataError("adjacency has a self-loop");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = g.adjacency(i, j);
      if (!std::isfinite(w) || w < 0.0) throw DataError("invalid edge weight");
      if (w != g.adjacency(j, i)) throw DataError("adjacency is not symmetric");
    }
  }
}

Graph Coge(const Corpus& corpus, const CogeOptions& options) {
  if (corpus.documents.empty()) throw DataError("corpus is empty");
  if (options.window == 0) throw ConfigError("window must be at least 1");
  const auto n = static_cast<Eigen::Index>(corpus.vocabulary.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  std::vector<long> ids;
  for (const Document& d : corpus.documents) {
    ids.clear();
    for (const std::string& t : d.tokens) {
      auto id = corpus.vocabulary.Find(t);
      ids.push_back(id ? static_cast<long>(*id) : -1);
    }
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (ids[p] < 0) continue;
      const std::size_t end = std::min(ids.size(), p + options.window);
      for (std::size_t q = p + 1; q < end; ++q) {
        if (ids[q] < 0 || ids[q] == ids[p]) continue;
        counts(ids[p], ids[q]) += 1.0;
        counts(ids[q], ids[p]) += 1.0;
      }
    }
  }
  Graph g{corpus.vocabulary, std::move(counts)};
  if (g.EdgeCount() == 0) throw DataError("corpus yields no co-occurrence edges");
  if (options.normalize) {
    Eigen::VectorXd rows = g.adjacency.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rows[i] > 0.0) g.adjacency.row(i) /= rows[i];
    }
    Eigen::MatrixXd sym = 0.5 * (g.adjacency + g.adjacency.transpose());
    g.adjacency = std::move(sym);
  }
  return g;
}

Eigen::MatrixXd ColumnAffinity(const Eigen::MatrixXd& weights,
                               std::size_t neighbors) {
  const Eigen::Index n = weights.cols();
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double d2 = (weights.col(i) - weights.col(j)).squaredNorm();
      sq(i, j) = sq(j, i) = d2;
      distances.push_back(std::sqrt(d2));
    }
  }
  double sigma = 1.0;
  if (!distances.empty()) {
    std::sort(distances.begin(), distances.end());
    const std::size_t mid = distances.size() / 2;
    sigma = distances.size() % 2 ? distances[mid]
                                 : 0.5 * (distances[mid - 1] + distances[mid]);
    if (!(sigma > 0.0)) sigma = 1.0;
  }
  Eigen::MatrixXd affinity = (-sq.array() / (2.0 * sigma * sigma)).exp().matrix();
  affinity.diagonal().setZero();

  Eigen::MatrixXd keep = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> order;
  const auto k = std::min<std::size_t>(neighbors, static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)));
  for (Eigen::Index i = 0; i < n; ++i) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return affinity(i, a) > affinity(i, b);
    });
    for (std::size_t r = 0; r < k; ++r) {
      keep(i, order[r]) = 1.0;
      keep(order[r], i) = 1.0;
    }
  }
  return affinity.cwiseProduct(keep);
}

Graph Sge(const Corpus& corpus, const SgeOptions& options) {
  if (!corpus.labeled) throw DataError("supervised graph estimation needs labels");
  if (corpus.num_classes < 2) throw DataError("supervised graph estimation needs at least 2 classes");
  if (options.hidden_units == 0 || options.epochs == 0 || options.batch_size == 0) {
    throw ConfigError("hidden units, epochs and batch size must be positive");
  }
  const Dataset data = BuildDataset(corpus, corpus.vocabulary);
  if (data.size() == 0) throw DataError("no usable documents");
  const std::size_t n = data.nodes();
  const auto classes = static_cast<Eigen::Index>(corpus.num_classes);

  Rng init = Rng::Stream(options.seed, "sge-init");
  DenseLayer first = InitDense(options.hidden_units, n, init);
  first.weights *= options.init_scale;
  DenseLayer second = InitDense(static_cast<std::size_t>(classes), options.hidden_units, init);

  AdaGradState state;
  state.learning_rate = options.learning_rate;
  Rng shuffle = Rng::Stream(options.seed, "sge-shuffle");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  Eigen::MatrixXd gw1, gw2;
  Eigen::VectorXd gb1, gb2;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle.Shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      const auto b = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(n), b);
      for (Eigen::Index c = 0; c < b; ++c) x.col(c) = data.signals.col(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(c)]));

      Eigen::MatrixXd pre = (first.weights * x).colwise() + first.bias;
      Eigen::MatrixXd act = pre.cwiseMax(0.0);
      Eigen::MatrixXd probs = Softmax((second.weights * act).colwise() + second.bias);
      double loss = 0.0;
      Eigen::MatrixXd dlogits = probs;
      for (Eigen::Index c = 0; c < b; ++c) {
        const int label = data.labels[order[start + static_cast<std::size_t>(c)]];
        loss += CrossEntropy(probs.col(c), label);
        dlogits(label, c) -= 1.0;
      }
      if (!std::isfinite(loss)) throw NumericError("SGE classifier diverged (non-finite loss)");
      dlogits /= static_cast<double>(b);
      gw2 = dlogits * act.transpose();
      gb2 = dlogits.rowwise().sum();
      Eigen::MatrixXd dpre = (second.weights.transpose() * dlogits).cwiseProduct(
          (pre.array() > 0.0).cast<double>().matrix());
      gw1 = dpre * x.transpose();
      gb1 = dpre.rowwise().sum();

      const std::span<double> params[] = {
          {first.weights.data(), static_cast<std::size_t>(first.weights.size())},
          {first.bias.data(), static_cast<std::size_t>(first.bias.size())},
          {second.weights.data(), static_cast<std::size_t>(second.weights.size())},
          {second.bias.data(), static_cast<std::size_t>(second.bias.size())}};
      const std::span<const double> grads[] = {
          {gw1.data(), static_cast<std::size_t>(gw1.size())},
          {gb1.data(), static_cast<std::size_t>(gb1.size())},
          {gw2.data(), static_cast<std::size_t>(gw2.size())},
          {gb2.data(), static_cast<std::size_t>(gb2.size())}};
      AdaGradStep(state, params, grads);
    }
  }
  if (!first.weights.allFinite()) throw NumericError("SGE classifier diverged");

  Graph g{corpus.vocabulary, ColumnAffinity(first.weights, options.neighbors)};
  if (g.EdgeCount() == 0) throw DataError("supervised estimation produced no edges");
  return g;
}

std::vector<int> ComponentLabels(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (g.adjacency(u, v) != 0.0 && label[static_cast<std::size_t>(v)] < 0) {
          label[static_cast<std::size_t>(v)] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

ConnectedGraph EnsureConnected(const Graph& g) {
  const std::vector<int> label = ComponentLabels(g);
  const int components = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  ConnectedGraph out;
  if (components <= 1) {
    out.graph = g;
    out.kept.resize(g.size());
    std::iota(out.kept.begin(), out.kept.end(), 0);
    return out;
  }
  // Components are numbered in order of their lowest node, so the first
  // maximum is the tie-break winner.
  std::vector<std::size_t> sizes(static_cast<std::size_t>(components), 0);
  for (int l : label) ++sizes[static_cast<std::size_t>(l)];
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  std::vector<std::string> words;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == best) {
      out.kept.push_back(i);
      words.push_back(g.vocabulary.word(i));
    }
  }
  const auto k = static_cast<Eigen::Index>(out.kept.size());
  out.graph.adjacency.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out.graph.adjacency(a, b) = g.adjacency(static_cast<Eigen::Index>(out.kept[static_cast<std::size_t>(a)]),
                                              static_cast<Eigen::Index>(out.kept[static_cast<std::size_t>(b)]));
    }
  }
  out.graph.vocabulary = Vocabulary(std::move(words));
  out.dropped = g.size() - out.kept.size();
  return out;
}

UnionGraph AlignUnion(const Graph& source, const Corpus& target) {
  if (target.documents.empty()) throw DataError("target corpus is empty");
  std::vector<std::string> words = source.vocabulary.words();
  for (const std::string& w : target.vocabulary.words()) {
    if (!source.vocabulary.Contains(w)) words.push_back(w);
  }
  UnionGraph out;
  out.source_nodes = source.size();
  const auto n = static_cast<Eigen::Index>(words.size());
  const auto s = static_cast<Eigen::Index>(source.size());
  out.graph.adjacency = Eigen::MatrixXd::Zero(n, n);
  out.graph.adjacency.topLeftCorner(s, s) = source.adjacency;
  out.graph.vocabulary = Vocabulary(std::move(words));
  return out;
}

std::string GraphToJson(const Graph& g) {
  nlohmann::json edges = nlohmann::json::array();
  const auto n = static_cast<Eigen::Index>(g.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (g.adjacency(i, j) != 0.0) edges.push_back({i, j, g.adjacency(i, j)});
    }
  }
  nlohmann::json doc = {{"n", g.size()}, {"vocab", g.vocabulary.words()}, {"edges", std::move(edges)}};
  return doc.dump() + "\n";
}

Graph GraphFromJson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    const auto n = doc.at("n").get<std::size_t>();
    auto words = doc.at("vocab").get<std::vector<std::string>>();
    if (words.size() != n) throw DataError("graph vocab length does not match n");
    Graph g;
    g.vocabulary = Vocabulary(std::move(words));
    g.adjacency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& e : doc.at("edges")) {
      const auto i = e.at(0).get<std::size_t>();
      const auto j = e.at(1).get<std::size_t>();
      const double w = e.at(2).get<double>();
      if (i >= j || j >= n) throw DataError("graph edge indices must satisfy i < j < n");
      g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
      g.adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
    }
    ValidateGraph(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed graph file: ") + e.what());
  }
}

void SaveGraph(const Graph& g, const std::string& path) {
  WriteFileAtomic(path, GraphToJson(g));
}

Graph LoadGraph(const std::string& path) { return GraphFromJson(ReadFile(path)); }

}  // namespace scnn
