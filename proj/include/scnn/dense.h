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

#ifndef SCNN_DENSE_H_
#define SCNN_DENSE_H_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scnn/random.h"

namespace scnn {

inline constexpr double kProbabilityFloor = 1e-12;

struct DenseLayer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;

  std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
};

// Uniform(-1/sqrt(inputs), 1/sqrt(inputs)) weights and zero bias, or all
// zeros when zero_init is set.
DenseLayer InitDense(std::size_t outputs, std::size_t inputs, Rng& rng,
                     bool zero_init = false);

inline double Relu(double x) { return x > 0.0 ? x : 0.0; }

// Column-wise softmax with max subtraction.
Eigen::MatrixXd Softmax(const Eigen::MatrixXd& logits);

// -ln(probs[label]) with probs clamped below at kProbabilityFloor.
double CrossEntropy(const Eigen::Ref<const Eigen::VectorXd>& probs, int label);

// Index of the largest entry; the first one wins ties.
int Argmax(const Eigen::Ref<const Eigen::VectorXd>& values);

// Per-parameter AdaGrad accumulators for a fixed list of parameter blocks.
struct AdaGradState {
  double learning_rate = 0.01;
  double damping = 1e-8;
  std::vector<Eigen::VectorXd> accumulators;
};

// accumulator += g^2; param -= lr * g / (sqrt(accumulator) + damping).
// Blocks whose trainable flag is false are skipped entirely; an empty mask
// trains every block. Accumulators are sized on first use.
void AdaGradStep(AdaGradState& state, std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads,
                 const std::vector<bool>& trainable = {});

}  // namespace scnn

#endif  // SCNN_DENSE_H_
