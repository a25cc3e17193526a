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

#ifndef SCNN_SIMILARITY_H_
#define SCNN_SIMILARITY_H_

#include <utility>

#include <Eigen/Dense>

#include "scnn/corpus.h"
#include "scnn/graph.h"
#include "scnn/spectral.h"

namespace scnn {

// Pairwise node affinities [I + eps^2 D - eps A]^-1 of a graph whose weights
// have been divided by its largest weighted degree. The rescaling keeps the
// system diagonally dominant for any eps < 1 and makes the score depend on
// structure rather than corpus size.
struct AffinityMatrix {
  Eigen::MatrixXd matrix;
  double epsilon = kDefaultRestartEpsilon;
};

AffinityMatrix Affinity(const Graph& g, double epsilon = kDefaultRestartEpsilon);

// 1 / (1 + d) with d the rooted Euclidean distance between the clamped
// affinity matrices. Both graphs must share one vocabulary (same words, same
// order); otherwise DataError.
double GraphSim(const Graph& g1, const Graph& g2, double epsilon = kDefaultRestartEpsilon);

// Pads both graphs to the lexicographically sorted union of their
// vocabularies; missing nodes become isolated.
std::pair<Graph, Graph> AlignGraphs(const Graph& g1, const Graph& g2);

// GraphSim after AlignGraphs. Symmetric in its arguments.
double GraphSimUnion(const Graph& g1, const Graph& g2, double epsilon = kDefaultRestartEpsilon);

// Pearson correlation of per-word ln(1 + total count) over the union of the
// two corpus vocabularies. Throws DataError when either vector is constant.
double CorpusCorr(const Corpus& c1, const Corpus& c2);

// Size of the union of two vocabularies.
std::size_t UnionSize(const Vocabulary& a, const Vocabulary& b);

}  // namespace scnn

#endif  // SCNN_SIMILARITY_H_
