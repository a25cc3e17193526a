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

#include "scnn/spectral.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "scnn/error.h"
#include "scnn/io.h"

namespace scnn {
namespace {

thread_local uint64_t eig_counter = 0;

constexpr char kBasisMagic[] = "SCNNBAS1";
constexpr uint32_t kBasisVersion = 1;

// Relative slack when deciding that two entries tie for largest magnitude.
constexpr double kSignTieTolerance = 1e-10;

void ApplySignConvention(Eigen::MatrixXd& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    const double peak = u.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      if (std::abs(u(r, c)) >= peak * (1.0 - kSignTieTolerance)) {
        if (u(r, c) < 0.0) u.col(c) = -u.col(c);
        break;
      }
    }
  }
}

}  // namespace

std::string ToString(LaplacianKind kind) {
  switch (kind) {
    case LaplacianKind::kBasic: return "basic";
    case LaplacianKind::kRandomWalk: return "rw";
    case LaplacianKind::kRandomWalkRestart: return "rwr";
  }
  return "unknown";
}

LaplacianKind ParseLaplacianKind(const std::string& name) {
  if (name == "basic") return LaplacianKind::kBasic;
  if (name == "rw") return LaplacianKind::kRandomWalk;
  if (name == "rwr") return LaplacianKind::kRandomWalkRestart;
  throw ConfigError("unknown Laplacian kind '" + name + "' (basic|rw|rwr)");
}

Laplacian ComputeLaplacian(const Graph& g, LaplacianKind kind,
                           std::optional<double> epsilon) {
  ValidateGraph(g);
  const auto n = static_cast<Eigen::Index>(g.size());
  Laplacian l;
  l.kind = kind;
  l.degree = g.Degrees();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  switch (kind) {
    case LaplacianKind::kBasic:
      l.matrix = Eigen::MatrixXd(l.degree.asDiagonal()) - g.adjacency;
      break;
    case LaplacianKind::kRandomWalk: {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(l.degree[i] > 0.0)) {
          throw DataError("node '" + g.vocabulary.word(static_cast<std::size_t>(i)) +
                          "' has zero degree; rw Laplacian undefined");
        }
      }
      l.matrix = identity - l.degree.cwiseInverse().asDiagonal() * g.adjacency;
      break;
    }
    case LaplacianKind::kRandomWalkRestart: {
      if (!epsilon) throw ConfigError("rwr Laplacian needs epsilon");
      const double eps = *epsilon;
      if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("rwr epsilon must lie in (0, 1)");
      l.epsilon = eps;
      Eigen::MatrixXd system = identity + eps * eps * Eigen::MatrixXd(l.degree.asDiagonal()) - eps * g.adjacency;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
      if (!lu.isInvertible()) throw NumericError("I + eps^2 D - eps A is singular");
      l.matrix = lu.inverse();
      if (!l.matrix.allFinite()) throw NumericError("rwr inverse is not finite");
      break;
    }
  }
  return l;
}

double SpectralRadiusEstimate(const Eigen::MatrixXd& symmetric,
                              std::size_t iterations) {
  const Eigen::Index n = symmetric.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    // Iterating with M^2 avoids oscillation between +rho and -rho.
    Eigen::VectorXd w = symmetric * (symmetric * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    estimate = std::sqrt(norm);
    v = w / norm;
  }
  return estimate;
}

Eigen::MatrixXd RwrSeries(const Graph& g, double epsilon, std::size_t terms) {
  ValidateGraph(g);
  if (terms == 0) throw ConfigError("series needs at least one term");
  const Eigen::MatrixXd scaled = epsilon * g.adjacency;
  const double row_bound = scaled.size() ? scaled.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  if (row_bound >= 1.0) {
    const double rho = SpectralRadiusEstimate(scaled);
    if (rho >= 1.0 - 1e-9) {
      throw NumericError("series diverges: spectral radius of eps*A is about " + std::to_string(rho));
    }
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t k = 1; k <= terms; ++k) {
    power = power * scaled;
    sum += power;
  }
  return sum;
}

Eigen::MatrixXd SymmetricOperator(const Laplacian& l) {
  switch (l.kind) {
    case LaplacianKind::kBasic:
      return l.matrix;
    case LaplacianKind::kRandomWalk: {
      const Eigen::VectorXd root = l.degree.cwiseSqrt();
      return root.asDiagonal() * l.matrix * root.cwiseInverse().asDiagonal();
    }
    case LaplacianKind::kRandomWalkRestart:
      return 0.5 * (l.matrix + l.matrix.transpose());
  }
  return l.matrix;
}

SpectralBasis Eigendecompose(const Laplacian& l) {
  const Eigen::MatrixXd op = SymmetricOperator(l);
  if (!op.allFinite()) throw NumericError("operator has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  ++eig_counter;
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver did not converge within " +
                       std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations) +
                       " sweeps per eigenvalue (n = " + std::to_string(op.rows()) + ")");
  }
  SpectralBasis basis;
  basis.eigenvalues = solver.eigenvalues();
  basis.eigenvectors = solver.eigenvectors();
  ApplySignConvention(basis.eigenvectors);
  basis.source_kind = l.kind;
  basis.symmetrized = l.kind != LaplacianKind::kBasic;
  basis.epsilon = l.epsilon.value_or(0.0);
  const double peak = basis.eigenvalues.size() ? basis.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  basis.scale = peak > 0.0 ? peak : 1.0;
  basis.filter_index.resize(basis.dim());
  for (std::size_t c = 0; c < basis.dim(); ++c) basis.filter_index[c] = c;
  return basis;
}

uint64_t EigendecompositionCount() { return eig_counter; }

Eigen::VectorXd Gft(const SpectralBasis& basis, const Eigen::VectorXd& f) {
  if (static_cast<std::size_t>(f.size()) != basis.nodes()) {
    throw DataError("signal length " + std::to_string(f.size()) + " does not match " +
                    std::to_string(basis.nodes()) + " nodes");
  }
  return basis.eigenvectors.transpose() * f;
}

Eigen::VectorXd Igft(const SpectralBasis& basis, const Eigen::VectorXd& f_hat) {
  if (static_cast<std::size_t>(f_hat.size()) != basis.dim()) {
    throw DataError("coefficient length " + std::to_string(f_hat.size()) +
                    " does not match basis dimension " + std::to_string(basis.dim()));
  }
  return basis.eigenvectors * f_hat;
}

Eigen::VectorXd SpectralConvolve(const SpectralBasis& basis,
                                 const Eigen::VectorXd& f,
                                 const Eigen::VectorXd& g_hat) {
  if (static_cast<std::size_t>(g_hat.size()) != basis.dim()) {
    throw DataError("multiplier length does not match basis dimension");
  }
  return Igft(basis, g_hat.cwiseProduct(Gft(basis, f)));
}

Eigen::VectorXd HornerEvaluate(const Eigen::VectorXd& points,
                               std::span<const double> coefficients) {
  if (coefficients.empty()) throw ConfigError("polynomial needs at least one coefficient");
  Eigen::VectorXd value = Eigen::VectorXd::Constant(points.size(), coefficients.back());
  for (std::size_t k = coefficients.size() - 1; k-- > 0;) {
    value = value.cwiseProduct(points).array() + coefficients[k];
  }
  return value;
}

Eigen::VectorXd PolynomialMultipliers(const SpectralBasis& basis,
                                      std::span<const double> coefficients) {
  if (coefficients.size() > basis.dim()) {
    throw ConfigError("kernel degree " + std::to_string(coefficients.size() - 1) +
                      " must be below basis size " + std::to_string(basis.dim()));
  }
  return HornerEvaluate(basis.eigenvalues, coefficients);
}

SpectralBasis TruncateBasis(const SpectralBasis& basis, std::size_t d) {
  if (d == 0 || d > basis.dim()) {
    throw ConfigError("truncation size " + std::to_string(d) + " outside [1, " +
                      std::to_string(basis.dim()) + "]");
  }
  SpectralBasis out = basis;
  const auto k = static_cast<Eigen::Index>(d);
  out.eigenvalues = basis.eigenvalues.head(k);
  out.eigenvectors = basis.eigenvectors.leftCols(k);
  out.filter_index.assign(basis.filter_index.begin(), basis.filter_index.begin() + k);
  return out;
}

double IsolatedNodeEigenvalue(LaplacianKind kind) {
  return kind == LaplacianKind::kRandomWalkRestart ? 1.0 : 0.0;
}

SpectralBasis EmbedIsolatedNodes(const SpectralBasis& basis, std::size_t extra) {
  if (extra == 0) return basis;
  const double value = IsolatedNodeEigenvalue(basis.source_kind);
  const double tol = 1e-9 * std::max(1.0, basis.scale);
  const std::size_t dim = basis.dim();
  // Number of source columns at or below the isolated eigenvalue.
  std::size_t split = 0;
  while (split < dim && basis.eigenvalues[static_cast<Eigen::Index>(split)] <= value + tol) ++split;

  const auto nodes = static_cast<Eigen::Index>(basis.nodes());
  const auto total_nodes = nodes + static_cast<Eigen::Index>(extra);
  const auto total_dim = static_cast<Eigen::Index>(dim + extra);
  const auto s = static_cast<Eigen::Index>(split);
  const auto x = static_cast<Eigen::Index>(extra);

  SpectralBasis out = basis;
  out.eigenvalues.resize(total_dim);
  out.eigenvectors = Eigen::MatrixXd::Zero(total_nodes, total_dim);
  out.eigenvalues.head(s) = basis.eigenvalues.head(s);
  out.eigenvalues.segment(s, x).setConstant(value);
  out.eigenvalues.tail(total_dim - s - x) = basis.eigenvalues.tail(static_cast<Eigen::Index>(dim) - s);
  out.eigenvectors.topLeftCorner(nodes, s) = basis.eigenvectors.leftCols(s);
  out.eigenvectors.block(nodes, s, x, x).setIdentity();
  out.eigenvectors.topRightCorner(nodes, total_dim - s - x) =
      basis.eigenvectors.rightCols(static_cast<Eigen::Index>(dim) - s);

  const std::size_t shared = split > 0 ? basis.filter_index[split - 1] : basis.filter_index.front();
  out.filter_index.clear();
  out.filter_index.insert(out.filter_index.end(), basis.filter_index.begin(),
                          basis.filter_index.begin() + s);
  out.filter_index.insert(out.filter_index.end(), extra, shared);
  out.filter_index.insert(out.filter_index.end(), basis.filter_index.begin() + s,
                          basis.filter_index.end());
  return out;
}

std::string SerializeBasis(const SpectralBasis& basis) {
  ByteWriter w;
  w.Bytes(std::string_view(kBasisMagic, 8));
  w.U32(kBasisVersion);
  w.U64(basis.nodes());
  w.U64(basis.dim());
  w.U8(static_cast<uint8_t>(basis.source_kind));
  w.U8(basis.symmetrized ? 1 : 0);
  w.F64(basis.epsilon);
  w.F64(basis.scale);
  w.F64s(std::span<const double>(basis.eigenvalues.data(), basis.dim()));
  for (Eigen::Index r = 0; r < basis.eigenvectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < basis.eigenvectors.cols(); ++c) w.F64(basis.eigenvectors(r, c));
  }
  for (std::size_t idx : basis.filter_index) w.U64(idx);
  const uint64_t checksum = Fnv1a64(w.buffer());
  w.U64(checksum);
  return w.buffer();
}

SpectralBasis DeserializeBasis(const std::string& bytes) {
  if (bytes.size() < 16) throw DataError("basis cache too short");
  const std::string_view payload(bytes.data(), bytes.size() - 8);
  ByteReader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.U64() != Fnv1a64(payload)) throw DataError("basis cache checksum mismatch");

  ByteReader r(payload);
  if (r.Bytes(8) != std::string_view(kBasisMagic, 8)) throw DataError("not a basis cache file");
  if (r.U32() != kBasisVersion) throw DataError("unsupported basis cache version");
  const uint64_t nodes = r.U64();
  const uint64_t dim = r.U64();
  SpectralBasis basis;
  const uint8_t kind = r.U8();
  if (kind > 2) throw DataError("unknown Laplacian kind tag in basis cache");
  basis.source_kind = static_cast<LaplacianKind>(kind);
  basis.symmetrized = r.U8() != 0;
  basis.epsilon = r.F64();
  basis.scale = r.F64();
  if (r.remaining() != dim * 8 + nodes * dim * 8 + dim * 8) throw DataError("basis cache size mismatch");
  basis.eigenvalues.resize(static_cast<Eigen::Index>(dim));
  r.F64s(std::span<double>(basis.eigenvalues.data(), dim));
  basis.eigenvectors.resize(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(dim));
  for (Eigen::Index row = 0; row < basis.eigenvectors.rows(); ++row) {
    for (Eigen::Index c = 0; c < basis.eigenvectors.cols(); ++c) basis.eigenvectors(row, c) = r.F64();
  }
  basis.filter_index.resize(dim);
  for (auto& idx : basis.filter_index) idx = static_cast<std::size_t>(r.U64());
  return basis;
}

void SaveBasis(const SpectralBasis& basis, const std::string& path) {
  WriteFileAtomic(path, SerializeBasis(basis));
}

SpectralBasis LoadBasis(const std::string& path) { return DeserializeBasis(ReadFile(path)); }

uint64_t BasisChecksum(const SpectralBasis& basis) {
  const std::string bytes = SerializeBasis(basis);
  ByteReader tail(std::string_view(bytes).substr(bytes.size() - 8));
  return tail.U64();
}

}  // namespace scnn
