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

#ifndef SCNN_GRAPH_H_
#define SCNN_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scnn/corpus.h"

namespace scnn {

inline constexpr std::size_t kDefaultWindow = 5;

// Weighted undirected graph over a vocabulary: symmetric, non-negative,
// zero diagonal. Node n is vocabulary word n.
struct Graph {
  Vocabulary vocabulary;
  Eigen::MatrixXd adjacency;

  std::size_t size() const { return vocabulary.size(); }
  // Nonzero strict-upper-triangle entries.
  std::size_t EdgeCount() const;
  Eigen::VectorXd Degrees() const { return adjacency.rowwise().sum(); }
};

// Throws DataError unless the invariants above hold exactly.
void ValidateGraph(const Graph& g);

struct CogeOptions {
  std::size_t window = kDefaultWindow;
  // Row-normalize the counts, then symmetrize as (A + A^T) / 2.
  bool normalize = false;
};

// Co-occurrence graph over corpus.vocabulary: A[i][j] counts token pairs at
// positions p < q with q - p < window whose words are i != j. Tokens outside
// the vocabulary still occupy positions. Throws DataError on zero edges.
Graph Coge(const Corpus& corpus, const CogeOptions& options = {});

struct SgeOptions {
  std::size_t hidden_units = 32;
  std::size_t epochs = 30;
  uint64_t seed = 0;
  std::size_t neighbors = 16;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  // Scale of the uniform first-layer initialization, relative to
  // 1/sqrt(inputs).
  double init_scale = 0.1;
};

// Supervised graph estimation. Trains a one-hidden-layer classifier on the
// corpus signals and links words whose first-layer weight columns are close:
// w_ij = exp(-|w_i - w_j|^2 / (2 sigma^2)) with sigma the median pairwise
// column distance, keeping an edge when either endpoint has the other among
// its `neighbors` strongest affinities.
Graph Sge(const Corpus& corpus, const SgeOptions& options = {});

// Affinity map used by Sge, exposed for testing: columns of `weights` are
// the per-word embeddings.
Eigen::MatrixXd ColumnAffinity(const Eigen::MatrixXd& weights,
                               std::size_t neighbors);

struct ConnectedGraph {
  Graph graph;
  std::size_t dropped = 0;
  // Original node index of every kept node, ascending.
  std::vector<std::size_t> kept;
};

// Restricts a disconnected graph to its largest component (ties: the
// component holding the lowest node index). Node order is preserved.
ConnectedGraph EnsureConnected(const Graph& g);

std::vector<int> ComponentLabels(const Graph& g);

struct UnionGraph {
  Graph graph;  // over V_source followed by new target words
  std::size_t source_nodes = 0;
};

// Embeds the source graph into the union of its vocabulary and the target
// corpus vocabulary. New words follow the source words in target vocabulary
// order; their rows and columns are zero.
UnionGraph AlignUnion(const Graph& source, const Corpus& target);

// {"n": int, "vocab": [string], "edges": [[i, j, w], ...]} with i < j.
std::string GraphToJson(const Graph& g);
Graph GraphFromJson(const std::string& text);
void SaveGraph(const Graph& g, const std::string& path);
Graph LoadGraph(const std::string& path);

}  // namespace scnn

#endif  // SCNN_GRAPH_H_
