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

#include "scnn/similarity.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>

#include <Eigen/LU>

#include "scnn/error.h"

namespace scnn {

AffinityMatrix Affinity(const Graph& g, double epsilon) {
  ValidateGraph(g);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a = g.adjacency;
  Eigen::VectorXd degree = a.rowwise().sum();
  const double peak = n ? degree.maxCoeff() : 0.0;
  if (peak > 0.0) {
    a /= peak;
    degree /= peak;
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) +
                           epsilon * epsilon * Eigen::MatrixXd(degree.asDiagonal()) - epsilon * a;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  AffinityMatrix out;
  out.epsilon = epsilon;
  out.matrix = lu.inverse();
  if (!out.matrix.allFinite()) throw NumericError("affinity system is singular");
  return out;
}

double GraphSim(const Graph& g1, const Graph& g2, double epsilon) {
  if (!(g1.vocabulary == g2.vocabulary)) throw DataError("graphs are not aligned to one vocabulary");
  const AffinityMatrix s1 = Affinity(g1, epsilon);
  const AffinityMatrix s2 = Affinity(g2, epsilon);
  const Eigen::ArrayXXd r1 = s1.matrix.array().max(0.0).sqrt();
  const Eigen::ArrayXXd r2 = s2.matrix.array().max(0.0).sqrt();
  const double d = std::sqrt((r1 - r2).square().sum());
  return 1.0 / (1.0 + d);
}

namespace {

Graph Reindex(const Graph& g, const Vocabulary& target) {
  Graph out;
  out.vocabulary = target;
  const auto n = static_cast<Eigen::Index>(target.size());
  out.adjacency = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> pos(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pos[i] = static_cast<Eigen::Index>(*target.Find(g.vocabulary.word(i)));
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      out.adjacency(pos[i], pos[j]) = g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

}  // namespace

std::pair<Graph, Graph> AlignGraphs(const Graph& g1, const Graph& g2) {
  std::set<std::string> words(g1.vocabulary.words().begin(), g1.vocabulary.words().end());
  words.insert(g2.vocabulary.words().begin(), g2.vocabulary.words().end());
  const Vocabulary joint(std::vector<std::string>(words.begin(), words.end()));
  return {Reindex(g1, joint), Reindex(g2, joint)};
}

double GraphSimUnion(const Graph& g1, const Graph& g2, double epsilon) {
  auto [a, b] = AlignGraphs(g1, g2);
  return GraphSim(a, b, epsilon);
}

std::size_t UnionSize(const Vocabulary& a, const Vocabulary& b) {
  std::size_t n = a.size();
  for (const std::string& w : b.words()) n += !a.Contains(w);
  return n;
}

double CorpusCorr(const Corpus& c1, const Corpus& c2) {
  std::set<std::string> words(c1.vocabulary.words().begin(), c1.vocabulary.words().end());
  words.insert(c2.vocabulary.words().begin(), c2.vocabulary.words().end());
  const Vocabulary joint(std::vector<std::string>(words.begin(), words.end()));
  auto aggregate = [&joint](const Corpus& c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(joint.size()));
    for (const Document& d : c.documents) {
      for (const std::string& t : d.tokens) {
        if (auto i = joint.Find(t)) v[static_cast<Eigen::Index>(*i)] += 1.0;
      }
    }
    return Eigen::VectorXd(v.array().log1p());
  };
  const Eigen::VectorXd x = aggregate(c1);
  const Eigen::VectorXd y = aggregate(c2);
  const Eigen::VectorXd dx = x.array() - x.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double sx = dx.norm(), sy = dy.norm();
  if (!(sx > 0.0) || !(sy > 0.0)) throw DataError("degenerate corpus: bag-of-words vector has zero variance");
  return dx.dot(dy) / (sx * sy);
}

}  // namespace scnn
