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

#ifndef SCNN_SPECTRAL_H_
#define SCNN_SPECTRAL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scnn/graph.h"

namespace scnn {

inline constexpr double kDefaultRestartEpsilon = 0.1;

enum class LaplacianKind : uint8_t {
  kBasic = 0,            // D - A
  kRandomWalk = 1,       // I - D^-1 A
  kRandomWalkRestart = 2 // [I + eps^2 D - eps A]^-1
};

std::string ToString(LaplacianKind kind);
// "basic", "rw" or "rwr"; throws ConfigError otherwise.
LaplacianKind ParseLaplacianKind(const std::string& name);

struct Laplacian {
  LaplacianKind kind = LaplacianKind::kBasic;
  Eigen::MatrixXd matrix;
  std::optional<double> epsilon;  // rwr only
  Eigen::VectorXd degree;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

// Dense evaluation of the chosen formula. The rwr kind inverts
// I + eps^2 D - eps A directly. Throws DataError for a zero-degree node under
// rw, NumericError for a singular rwr system, ConfigError when rwr lacks
// epsilon.
Laplacian ComputeLaplacian(const Graph& g, LaplacianKind kind,
                           std::optional<double> epsilon = std::nullopt);

// I + (eps A) + ... + (eps A)^terms. Throws NumericError unless the spectral
// radius of eps A is below one.
Eigen::MatrixXd RwrSeries(const Graph& g, double epsilon, std::size_t terms);

// Largest |eigenvalue| of a symmetric matrix by power iteration.
double SpectralRadiusEstimate(const Eigen::MatrixXd& symmetric,
                              std::size_t iterations = 500);

// The symmetric operator that is actually diagonalized: L itself for basic,
// D^-1/2 (D - A) D^-1/2 for rw and (S + S^T) / 2 for rwr.
Eigen::MatrixXd SymmetricOperator(const Laplacian& l);

// Graph Fourier basis. Columns of `eigenvectors` are orthonormal and
// `eigenvalues` ascend. A truncated basis keeps the first d columns.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // nodes x dim
  LaplacianKind source_kind = LaplacianKind::kBasic;
  bool symmetrized = false;
  double epsilon = 0.0;
  // max |lambda| over the full spectrum; polynomial filters are evaluated on
  // lambda / scale so high powers stay bounded.
  double scale = 1.0;
  // Column c shares filter index filter_index[c] of the basis the model was
  // trained on. Identity for bases produced by Eigendecompose.
  std::vector<std::size_t> filter_index;

  std::size_t nodes() const { return static_cast<std::size_t>(eigenvectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(eigenvectors.cols()); }
};

// Full symmetric eigendecomposition with ascending eigenvalues. Each
// eigenvector is signed so that its largest-magnitude entry (first on ties)
// is positive. Increments the calling thread's decomposition counter.
SpectralBasis Eigendecompose(const Laplacian& l);

// Number of Eigendecompose calls made on this thread.
uint64_t EigendecompositionCount();

Eigen::VectorXd Gft(const SpectralBasis& basis, const Eigen::VectorXd& f);
Eigen::VectorXd Igft(const SpectralBasis& basis, const Eigen::VectorXd& f_hat);

// U diag(g_hat) U^T f.
Eigen::VectorXd SpectralConvolve(const SpectralBasis& basis,
                                 const Eigen::VectorXd& f,
                                 const Eigen::VectorXd& g_hat);

// sum_k a_k lambda_l^k by Horner's rule. Throws ConfigError when K >= N.
Eigen::VectorXd PolynomialMultipliers(const SpectralBasis& basis,
                                      std::span<const double> coefficients);
Eigen::VectorXd HornerEvaluate(const Eigen::VectorXd& points,
                               std::span<const double> coefficients);

// Keeps the d smallest eigenpairs.
SpectralBasis TruncateBasis(const SpectralBasis& basis, std::size_t d);

// Eigenvalue of an isolated node under the given kind: 0 for basic and
// rw, 1 for rwr.
double IsolatedNodeEigenvalue(LaplacianKind kind);

// Basis of the graph obtained by appending `extra` isolated nodes. Their
// indicator vectors are eigenvectors with IsolatedNodeEigenvalue(kind); each
// is placed right after the last source eigenvalue not above it, and shares
// that column's filter index (the first column when none is). No
// decomposition is performed.
SpectralBasis EmbedIsolatedNodes(const SpectralBasis& basis, std::size_t extra);

// Binary cache record, little endian:
//   "SCNNBAS1" | u32 version | u64 nodes | u64 dim | u8 kind | u8 symmetrized
//   | f64 epsilon | f64 scale | dim x f64 eigenvalues | nodes*dim f64 U
//   (row-major) | dim x u64 filter index | u64 FNV-1a checksum of
//   everything before it.
std::string SerializeBasis(const SpectralBasis& basis);
SpectralBasis DeserializeBasis(const std::string& bytes);
void SaveBasis(const SpectralBasis& basis, const std::string& path);
SpectralBasis LoadBasis(const std::string& path);
// Checksum stored in the cache record; checkpoints reference it.
uint64_t BasisChecksum(const SpectralBasis& basis);

}  // namespace scnn

#endif  // SCNN_SPECTRAL_H_
