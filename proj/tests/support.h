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

#ifndef SCNN_TESTS_SUPPORT_H_
#define SCNN_TESTS_SUPPORT_H_

#include <cstddef>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "scnn/corpus.h"
#include "scnn/graph.h"

namespace scnn::testing {

inline Vocabulary Words(std::size_t n, const std::string& prefix = "w") {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(prefix + std::to_string(i));
  return Vocabulary(words);
}

inline Graph MakeGraph(std::size_t n, const std::vector<std::tuple<int, int, double>>& edges) {
  Graph g{Words(n), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  for (const auto& [i, j, w] : edges) {
    g.adjacency(i, j) = w;
    g.adjacency(j, i) = w;
  }
  return g;
}

inline Graph PathGraph(std::size_t n) {
  std::vector<std::tuple<int, int, double>> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(static_cast<int>(i), static_cast<int>(i + 1), 1.0);
  return MakeGraph(n, edges);
}

inline Graph CompleteGraph(std::size_t n) {
  std::vector<std::tuple<int, int, double>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
  }
  return MakeGraph(n, edges);
}

// Random spanning tree plus extra edges; weights uniform in [0.5, 2].
inline Graph RandomConnectedGraph(std::size_t n, std::mt19937_64& rng, double extra_edge_prob = 0.3) {
  std::uniform_real_distribution<double> weight(0.5, 2.0), coin(0.0, 1.0);
  std::vector<std::tuple<int, int, double>> edges;
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> parent(0, v - 1);
    edges.emplace_back(static_cast<int>(parent(rng)), static_cast<int>(v), weight(rng));
  }
  Graph g = MakeGraph(n, edges);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0 && coin(rng) < extra_edge_prob) {
        const double w = weight(rng);
        g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
        g.adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
      }
    }
  }
  return g;
}

inline Eigen::VectorXd RandomVector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return v;
}

// Gauss-Jordan inverse with partial pivoting, independent of Eigen's solvers.
inline Eigen::MatrixXd GaussJordanInverse(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index pivot = c;
    for (Eigen::Index r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
    }
    a.row(c).swap(a.row(pivot));
    inv.row(c).swap(inv.row(pivot));
    const double p = a(c, c);
    a.row(c) /= p;
    inv.row(c) /= p;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      a.row(r) -= f * a.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

inline Document Doc(std::vector<std::string> tokens, int label = 0) { return Document{std::move(tokens), label}; }

}  // namespace scnn::testing

#endif  // SCNN_TESTS_SUPPORT_H_
