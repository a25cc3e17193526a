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

#include "scnn/dense.h"

#include <algorithm>
#include <cmath>

#include "scnn/error.h"

namespace scnn {

DenseLayer InitDense(std::size_t outputs, std::size_t inputs, Rng& rng,
                     bool zero_init) {
  DenseLayer layer;
  const auto rows = static_cast<Eigen::Index>(outputs);
  const auto cols = static_cast<Eigen::Index>(inputs);
  layer.weights = Eigen::MatrixXd::Zero(rows, cols);
  layer.bias = Eigen::VectorXd::Zero(rows);
  if (!zero_init) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(inputs, 1)));
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) layer.weights(r, c) = rng.Uniform(-scale, scale);
    }
  }
  return layer;
}

Eigen::MatrixXd Softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const double peak = logits.col(b).maxCoeff();
    probs.col(b) = (logits.col(b).array() - peak).exp().matrix();
    probs.col(b) /= probs.col(b).sum();
  }
  return probs;
}

double CrossEntropy(const Eigen::Ref<const Eigen::VectorXd>& probs, int label) {
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

int Argmax(const Eigen::Ref<const Eigen::VectorXd>& values) {
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

void AdaGradStep(AdaGradState& state, std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads,
                 const std::vector<bool>& trainable) {
  if (params.size() != grads.size()) throw DataError("parameter/gradient block count mismatch");
  if (state.accumulators.empty()) {
    state.accumulators.reserve(params.size());
    for (const auto& p : params) {
      state.accumulators.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
    }
  }
  if (state.accumulators.size() != params.size()) throw DataError("optimizer state does not match parameters");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (!trainable.empty() && !trainable[b]) continue;
    std::span<double> p = params[b];
    std::span<const double> g = grads[b];
    Eigen::VectorXd& acc = state.accumulators[b];
    if (p.size() != g.size() || static_cast<Eigen::Index>(p.size()) != acc.size()) {
      throw DataError("parameter block " + std::to_string(b) + " shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc[static_cast<Eigen::Index>(i)] += g[i] * g[i];
      p[i] -= state.learning_rate * g[i] /
              (std::sqrt(acc[static_cast<Eigen::Index>(i)]) + state.damping);
    }
  }
}

}  // namespace scnn
