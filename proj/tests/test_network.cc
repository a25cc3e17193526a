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

#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "scnn/error.h"
#include "scnn/graph.h"
#include "scnn/network.h"
#include "support.h"

using namespace scnn;
using namespace scnn::testing;

namespace {

double MaxAbs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::shared_ptr<const SpectralBasis> BasisOf(const Graph& g, LaplacianKind kind = LaplacianKind::kBasic) {
  return std::make_shared<const SpectralBasis>(Eigendecompose(ComputeLaplacian(g, kind, 0.1)));
}

void RandomizeOutput(ScnnModel& m, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Eigen::Index i = 0; i < m.fc.back().weights.size(); ++i) m.fc.back().weights.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < m.fc.back().bias.size(); ++i) m.fc.back().bias[i] = u(rng);
}

// Straight-line forward pass written with scalar loops.
Eigen::VectorXd OracleForward(const ScnnModel& m, const Eigen::VectorXd& x) {
  const SpectralBasis& b = *m.basis;
  const Eigen::Index n = x.size();
  std::vector<Eigen::VectorXd> maps{x};
  for (const GraphConvLayer& layer : m.conv) {
    const auto d = static_cast<Eigen::Index>(layer.basis_dim);
    std::vector<Eigen::VectorXd> next;
    for (std::size_t j = 0; j < layer.out_maps; ++j) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < layer.in_maps; ++i) {
        const Eigen::Index col = static_cast<Eigen::Index>(i * layer.out_maps + j);
        for (Eigen::Index l = 0; l < d; ++l) {
          double g = 0.0;
          if (layer.kind == FilterKind::kFree) {
            g = layer.filters(l, col);
          } else {
            for (Eigen::Index k = 0; k < layer.filters.rows(); ++k) {
              g += layer.filters(k, col) * std::pow(b.eigenvalues[l] / b.scale, static_cast<double>(k));
            }
          }
          double coef = 0.0;
          for (Eigen::Index r = 0; r < n; ++r) coef += b.eigenvectors(r, l) * maps[i][r];
          for (Eigen::Index r = 0; r < n; ++r) acc[r] += g * coef * b.eigenvectors(r, l);
        }
      }
      for (Eigen::Index r = 0; r < n; ++r) acc[r] = acc[r] > 0.0 ? acc[r] : 0.0;
      next.push_back(acc);
    }
    maps = std::move(next);
  }
  Eigen::VectorXd h(n * static_cast<Eigen::Index>(maps.size()));
  for (std::size_t j = 0; j < maps.size(); ++j) h.segment(static_cast<Eigen::Index>(j) * n, n) = maps[j];
  for (std::size_t l = 0; l < m.fc.size(); ++l) {
    Eigen::VectorXd z = m.fc[l].bias;
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      for (Eigen::Index c = 0; c < h.size(); ++c) z[r] += m.fc[l].weights(r, c) * h[c];
    }
    if (l + 1 < m.fc.size()) {
      for (Eigen::Index r = 0; r < z.size(); ++r) z[r] = z[r] > 0.0 ? z[r] : 0.0;
    }
    h = z;
  }
  const double peak = h.maxCoeff();
  Eigen::VectorXd p = (h.array() - peak).exp();
  return p / p.sum();
}

double MeanLoss(const ScnnModel& m, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) s += Loss(Forward(m, x.col(c)), labels[static_cast<std::size_t>(c)]);
  return s / static_cast<double>(x.cols());
}

// Largest |analytic - central difference| / (|analytic| + 1e-8) over all
// parameters.
double GradientCheck(ScnnModel m, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  const BatchResult r = BackwardBatch(m, x, labels);
  const auto grads = GradientBlocks(r.grads);
  auto params = ParameterBlocks(m);
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double keep = params[b][i];
      params[b][i] = keep + h;
      const double up = MeanLoss(m, x, labels);
      params[b][i] = keep - h;
      const double down = MeanLoss(m, x, labels);
      params[b][i] = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(grads[b][i] - fd) / (std::abs(grads[b][i]) + 1e-8));
    }
  }
  return worst;
}

ModelConfig Config(const std::string& arch, std::size_t k = kDefaultKernelDegree, bool pooling = true) {
  return ModelConfig{Architecture::Parse(arch), k, pooling};
}

// Two classes over disjoint word groups, bridged by one shared word.
Corpus SeparableCorpus(std::size_t docs, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Document> out;
  for (std::size_t d = 0; d < docs; ++d) {
    const int label = static_cast<int>(d % 2);
    std::vector<std::string> tokens{"bridge"};
    for (int t = 0; t < 6; ++t) {
      tokens.push_back((label ? "b" : "a") + std::to_string(std::uniform_int_distribution<int>(0, 4)(rng)));
      if (t % 2) tokens.push_back("bridge");
    }
    out.push_back(Doc(tokens, label));
  }
  return MakeCorpus(out);
}

}  // namespace

TEST_CASE("architecture strings") {
  const Architecture a = Architecture::Parse("GC8-GC8-FC1K");
  CHECK(a.conv_maps == std::vector<std::size_t>{8, 8});
  CHECK(a.hidden_units == std::vector<std::size_t>{1000});
  CHECK(a.ToString() == "GC8-GC8-FC1K");
  CHECK(Architecture::Parse("GC4").hidden_units.empty());
  CHECK(Architecture::Parse("GC2-FC16-FC8").ToString() == "GC2-FC16-FC8");
  for (const char* bad : {"", "FC8", "FC8-GC2", "GC", "GC0", "GCx", "XY3", "GC2--FC3", "GC2-"}) {
    CHECK_THROWS_AS(Architecture::Parse(bad), ConfigError);
  }
}

TEST_CASE("pooling halves the spectrum per layer") {
  CHECK(ConvBasisDims(100, 3, true) == std::vector<std::size_t>{100, 50, 25});
  CHECK(ConvBasisDims(3, 4, true) == std::vector<std::size_t>{3, 1, 1, 1});
  CHECK(ConvBasisDims(100, 2, false) == std::vector<std::size_t>{100, 100});
}

TEST_CASE("initialization picks the filter kind and zeroes the output layer") {
  std::mt19937_64 rng(1);
  const auto basis = BasisOf(RandomConnectedGraph(12, rng));
  const ScnnModel m = InitModel(basis, 3, Config("GC2-GC2-FC5", 5), 7);
  REQUIRE(m.conv.size() == 2);
  CHECK(m.conv[0].basis_dim == 12);
  CHECK(m.conv[0].kind == FilterKind::kPolynomial);
  CHECK(m.conv[0].filters.rows() == 6);
  CHECK(m.conv[1].basis_dim == 6);
  CHECK(m.conv[1].kind == FilterKind::kFree);
  CHECK(m.conv[1].filters.rows() == 6);
  CHECK(m.conv[1].filters.cols() == 4);
  CHECK(m.fc.size() == 2);
  CHECK(m.fc[0].inputs() == 24);
  CHECK(MaxAbs(m.fc.back().weights) == 0.0);
  CHECK(m.num_classes() == 3);
  const double bound = 1.0 / std::sqrt(6.0);
  CHECK(MaxAbs(m.conv[0].filters) <= bound);
  CHECK(BlockNames(m) == std::vector<std::string>{"gc0.filters", "gc1.filters", "fc0.weights", "fc0.bias",
                                                   "fc1.weights", "fc1.bias"});
  CHECK(LayerNames(m) == std::vector<std::string>{"gc0", "gc1", "fc0", "fc1"});
}

TEST_CASE("conv forward examples") {
  std::mt19937_64 rng(2);
  const Graph p3 = PathGraph(3);
  const auto basis = BasisOf(p3);
  GraphConvLayer zero{1, 2, 3, FilterKind::kFree, 0, Eigen::MatrixXd::Zero(3, 2)};
  CHECK(MaxAbs(ConvForward(zero, *basis, RandomVector(3, rng))) == 0.0);

  GraphConvLayer ident{1, 1, 3, FilterKind::kFree, 0, Eigen::MatrixXd::Ones(3, 1)};
  const Eigen::VectorXd x = RandomVector(3, rng, 0.0, 1.0);
  CHECK(MaxAbs(ConvForward(ident, *basis, x) - x) < 1e-12);

  GraphConvLayer two{1, 2, 3, FilterKind::kFree, 0, Eigen::MatrixXd(3, 2)};
  for (Eigen::Index i = 0; i < 6; ++i) two.filters.data()[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
  const Eigen::VectorXd f = RandomVector(3, rng);
  const Eigen::MatrixXd y = ConvForward(two, *basis, f);
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd expect = SpectralConvolve(*basis, f, two.filters.col(j)).cwiseMax(0.0);
    CHECK(MaxAbs(y.col(j) - expect) < 1e-12);
  }

  GraphConvLayer sum2{2, 1, 3, FilterKind::kFree, 0, two.filters};
  Eigen::MatrixXd xin(3, 2);
  xin << RandomVector(3, rng), RandomVector(3, rng);
  const Eigen::VectorXd expect = (SpectralConvolve(*basis, xin.col(0), two.filters.col(0)) +
                                  SpectralConvolve(*basis, xin.col(1), two.filters.col(1)))
                                     .cwiseMax(0.0);
  CHECK(MaxAbs(ConvForward(sum2, *basis, xin).col(0) - expect) < 1e-12);
  CHECK_THROWS_AS(ConvForward(sum2, *basis, f), DataError);
}

TEST_CASE("zero output layer gives uniform probabilities") {
  std::mt19937_64 rng(3);
  const ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(8, rng)), 4, Config("GC3-FC6"), 1);
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd p = Forward(m, RandomVector(8, rng));
    CHECK(MaxAbs(p.array() - 0.25) < 1e-15);
  }
}

TEST_CASE("probabilities are positive and sum to one") {
  std::mt19937_64 rng(4);
  ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(10, rng)), 3, Config("GC3-GC2-FC6", 3), 2);
  RandomizeOutput(m, 9);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd p = Forward(m, RandomVector(10, rng, -5, 5));
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK((p.array() > 0.0).all());
  }
}

TEST_CASE("tiny GC2-FC4 model matches a hand-composed pipeline") {
  const auto basis = BasisOf(PathGraph(3));
  ScnnModel m = InitModel(basis, 2, Config("GC2-FC4"), 5);
  RandomizeOutput(m, 6);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = RandomVector(3, rng);
    CHECK(MaxAbs(Forward(m, x) - OracleForward(m, x)) < 1e-12);
  }
}

TEST_CASE("polynomial, truncated stacks match the oracle; batch equals per-document") {
  std::mt19937_64 rng(8);
  for (LaplacianKind kind : {LaplacianKind::kBasic, LaplacianKind::kRandomWalk, LaplacianKind::kRandomWalkRestart}) {
    ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(16, rng), kind), 3, Config("GC3-GC2-FC5", 4), 11);
    RandomizeOutput(m, 12);
    Eigen::MatrixXd x(16, 5);
    for (int c = 0; c < 5; ++c) x.col(c) = RandomVector(16, rng, 0.0, 2.0);
    const Eigen::MatrixXd batch = ForwardBatch(m, x);
    for (int c = 0; c < 5; ++c) {
      CHECK(MaxAbs(batch.col(c) - OracleForward(m, x.col(c))) < 1e-11);
      CHECK(MaxAbs(batch.col(c) - Forward(m, x.col(c))) < 1e-14);
    }
  }
}

TEST_CASE("loss examples") {
  CHECK(Loss(Eigen::Vector2d(1.0, 0.0), 0) == 0.0);
  CHECK(std::abs(Loss(Eigen::Vector4d::Constant(0.25), 2) - std::log(4.0)) < 1e-15);
  CHECK(std::abs(Loss(Eigen::Vector2d(0.7, 0.3), 1) - 1.2039728043259361) < 1e-12);
  CHECK(std::abs(Loss(Eigen::Vector2d(1.0, 0.0), 1) - -std::log(kProbabilityFloor)) < 1e-9);
  CHECK_THROWS_AS(Loss(Eigen::Vector2d(0.5, 0.5), 2), DataError);
}

TEST_CASE("output gradient at zero logits has the closed form") {
  std::mt19937_64 rng(9);
  const ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(6, rng)), 3, Config("GC2-FC4"), 3);
  const Eigen::VectorXd x = RandomVector(6, rng);
  const ModelGradients g = Backward(m, x, 1);
  const Eigen::MatrixXd features = ConvFeatures(m, x);
  const Eigen::VectorXd hidden = (m.fc[0].weights * features.col(0) + m.fc[0].bias).cwiseMax(0.0);
  Eigen::Vector3d delta = Eigen::Vector3d::Constant(1.0 / 3.0);
  delta[1] -= 1.0;
  CHECK(MaxAbs(g.fc_weights.back() - delta * hidden.transpose()) < 1e-14);
  CHECK(MaxAbs(g.fc_bias.back() - delta) < 1e-15);
  // Nothing flows below a zero output layer.
  CHECK(MaxAbs(g.fc_weights[0]) == 0.0);
  CHECK(MaxAbs(g.conv[0]) == 0.0);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(10);
  SUBCASE("free multipliers with hidden layer") {
    ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(6, rng)), 3, Config("GC2-GC2-FC5"), 21);
    RandomizeOutput(m, 22);
    Eigen::MatrixXd x(6, 3);
    for (int c = 0; c < 3; ++c) x.col(c) = RandomVector(6, rng, 0.0, 1.0);
    CHECK(GradientCheck(m, x, {0, 2, 1}) < 1e-4);
  }
  SUBCASE("polynomial filters under every Laplacian") {
    for (LaplacianKind kind : {LaplacianKind::kBasic, LaplacianKind::kRandomWalk, LaplacianKind::kRandomWalkRestart}) {
      ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(12, rng), kind), 2, Config("GC2-GC3", 3), 23);
      REQUIRE(m.conv[0].kind == FilterKind::kPolynomial);
      RandomizeOutput(m, 24);
      Eigen::MatrixXd x(12, 2);
      for (int c = 0; c < 2; ++c) x.col(c) = RandomVector(12, rng, 0.0, 1.0);
      CHECK(GradientCheck(m, x, {1, 0}) < 1e-4);
    }
  }
}

TEST_CASE("doubling the input doubles the output-layer gradient of a homogeneous model") {
  std::mt19937_64 rng(12);
  const ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(7, rng)), 2, Config("GC3-GC2"), 4);
  const Eigen::VectorXd x = RandomVector(7, rng, 0.0, 1.0);
  const ModelGradients g1 = Backward(m, x, 0), g2 = Backward(m, 2.0 * x, 0);
  CHECK(MaxAbs(g2.fc_weights.back() - 2.0 * g1.fc_weights.back()) < 1e-13);
}

TEST_CASE("batch gradient is the mean of per-document gradients") {
  std::mt19937_64 rng(13);
  ScnnModel m = InitModel(BasisOf(RandomConnectedGraph(8, rng)), 2, Config("GC2-FC3"), 5);
  RandomizeOutput(m, 6);
  Eigen::MatrixXd x(8, 4);
  for (int c = 0; c < 4; ++c) x.col(c) = RandomVector(8, rng);
  const std::vector<int> labels{0, 1, 1, 0};
  const BatchResult r = BackwardBatch(m, x, labels);
  Eigen::MatrixXd mean_conv = Eigen::MatrixXd::Zero(m.conv[0].filters.rows(), m.conv[0].filters.cols());
  for (int c = 0; c < 4; ++c) mean_conv += Backward(m, x.col(c), labels[static_cast<std::size_t>(c)]).conv[0] / 4.0;
  CHECK(MaxAbs(r.grads.conv[0] - mean_conv) < 1e-14);
  const BatchResult head = HeadBackwardBatch(m, ConvFeatures(m, x), labels);
  CHECK(MaxAbs(head.grads.fc_weights[0] - r.grads.fc_weights[0]) < 1e-14);
  CHECK(std::abs(head.loss_sum - r.loss_sum) < 1e-12);
}

TEST_CASE("adagrad examples") {
  std::vector<double> p{1.0};
  std::vector<double> zero{0.0}, one{1.0};
  const std::span<double> params[] = {p};
  AdaGradState s;
  const std::span<const double> g0[] = {zero};
  AdaGradStep(s, params, g0);
  CHECK(p[0] == 1.0);

  AdaGradState fresh;
  p[0] = 0.0;
  const std::span<const double> g1[] = {one};
  AdaGradStep(fresh, params, g1);
  CHECK(std::abs(p[0] - -0.01 / (1.0 + 1e-8)) < 1e-18);
  const double before = p[0];
  AdaGradStep(fresh, params, g1);
  CHECK(std::abs((p[0] - before) - -0.01 / (std::sqrt(2.0) + 1e-8)) < 1e-18);
}

TEST_CASE("adagrad accumulators are monotone and parameters stay finite") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<double> a(5, 0.0), b(3, 0.0), ga(5), gb(3);
  const std::span<double> params[] = {a, b};
  const std::span<const double> grads[] = {ga, gb};
  AdaGradState s;
  std::vector<Eigen::VectorXd> last;
  bool monotone = true;
  for (int step = 0; step < 10000; ++step) {
    for (double& v : ga) v = u(rng);
    for (double& v : gb) v = u(rng);
    AdaGradStep(s, params, grads);
    if (!last.empty()) {
      for (std::size_t k = 0; k < 2; ++k) monotone = monotone && (s.accumulators[k].array() >= last[k].array()).all();
    }
    last = s.accumulators;
  }
  CHECK(monotone);
  for (double v : a) CHECK(std::isfinite(v));
  for (double v : b) CHECK(std::isfinite(v));
}

TEST_CASE("adagrad skips masked blocks") {
  std::vector<double> a{1.0}, b{1.0}, g{1.0};
  const std::span<double> params[] = {a, b};
  const std::span<const double> grads[] = {g, g};
  AdaGradState s;
  AdaGradStep(s, params, grads, {false, true});
  CHECK(a[0] == 1.0);
  CHECK(b[0] != 1.0);
}

TEST_CASE("training on a separable corpus") {
  const Corpus c = SeparableCorpus(60, 1);
  const Graph g = Coge(c);
  const auto basis = BasisOf(g);
  const Dataset data = BuildDataset(c, g.vocabulary);
  ScnnModel m = InitModel(basis, 2, Config("GC4-FC16"), 3);
  const ScnnModel initial = m;
  TrainConfig tc;
  tc.epochs = 50;
  tc.seed = 3;

  SUBCASE("reaches full training accuracy") {
    const TrainReport r = Train(m, data, tc);
    REQUIRE(!r.records.empty());
    CHECK(r.records.back().accuracy == 1.0);
    CHECK(r.records.size() == 50);
    CHECK(Evaluate(m, data).accuracy == 1.0);
    CHECK(r.eig_count == 0);
  }
  SUBCASE("zero epochs is a no-op") {
    tc.epochs = 0;
    const TrainReport r = Train(m, data, tc);
    CHECK(r.records.empty());
    CHECK(SerializeCheckpoint(m) == SerializeCheckpoint(initial));
  }
  SUBCASE("same seed gives bit-identical parameters") {
    tc.epochs = 5;
    ScnnModel other = initial;
    Train(m, data, tc);
    Train(other, data, tc);
    CHECK(SerializeCheckpoint(m) == SerializeCheckpoint(other));
  }
  SUBCASE("frozen conv layers stay bit-identical") {
    tc.epochs = 5;
    tc.frozen = {"gc0"};
    Train(m, data, tc);
    CHECK(m.conv[0].filters == initial.conv[0].filters);
    CHECK(m.fc[0].weights != initial.fc[0].weights);
  }
  SUBCASE("unknown frozen layer is a config error") {
    tc.frozen = {"gc7"};
    CHECK_THROWS_AS(Train(m, data, tc), ConfigError);
  }
  SUBCASE("validation rows") {
    tc.epochs = 3;
    tc.val_fraction = 0.25;
    const TrainReport r = Train(m, data, tc);
    CHECK(r.records.size() == 6);
    CHECK(r.records[1].split == "val");
  }
  SUBCASE("divergence restores the last good epoch") {
    tc.epochs = 4;
    tc.learning_rate = 1e300;
    const TrainReport r = Train(m, data, tc);
    CHECK(r.diverged);
    for (const auto& block : ParameterBlocks(static_cast<const ScnnModel&>(m))) {
      for (double v : block) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("evaluation") {
  const Corpus c = SeparableCorpus(30, 2);
  const Graph g = Coge(c);
  const Dataset data = BuildDataset(c, g.vocabulary);
  const ScnnModel m = InitModel(BasisOf(g), 2, Config("GC2"), 1);
  const Evaluation e = Evaluate(m, data);
  // Uniform predictions resolve to class 0.
  CHECK(e.accuracy == doctest::Approx(15.0 / 30.0));
  CHECK(e.mean_loss == doctest::Approx(std::log(2.0)));
  for (std::size_t k = 0; k < 2; ++k) {
    std::size_t row = 0;
    for (std::size_t v : e.confusion[k]) row += v;
    CHECK(row == 15);
  }
  CHECK(e.confusion[1][1] == 0);
  Dataset empty;
  empty.signals.resize(static_cast<Eigen::Index>(g.size()), 0);
  empty.num_classes = 2;
  CHECK_THROWS_AS(Evaluate(m, empty), DataError);
}

TEST_CASE("checkpoint round trip and validation") {
  std::mt19937_64 rng(15);
  const auto basis = BasisOf(RandomConnectedGraph(70, rng));
  ScnnModel m = InitModel(basis, 3, Config("GC2-GC2-FC1K", 60), 9);
  RandomizeOutput(m, 10);
  const std::string bytes = SerializeCheckpoint(m);
  CHECK(bytes.substr(0, 8) == "SCNNCKP1");
  const ScnnModel r = DeserializeCheckpoint(bytes, basis);
  CHECK(SerializeCheckpoint(r) == bytes);
  CHECK(r.arch.ToString() == "GC2-GC2-FC1K");
  CHECK(r.conv[0].kind == FilterKind::kPolynomial);
  CHECK(r.conv[1].kind == FilterKind::kFree);
  const Eigen::VectorXd x = RandomVector(70, rng);
  CHECK(MaxAbs(Forward(r, x) - Forward(m, x)) == 0.0);

  const auto other = BasisOf(RandomConnectedGraph(70, rng));
  CHECK_THROWS_AS(DeserializeCheckpoint(bytes, other), DataError);
  std::string bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(DeserializeCheckpoint(bad, basis), DataError);
  CHECK_THROWS_AS(DeserializeCheckpoint(bytes.substr(0, 40), basis), DataError);
}

TEST_CASE("report CSV") {
  TrainReport r;
  r.records.push_back({1, "train", 0.5, 0.75, 1.25, 0});
  const std::string csv = ReportCsv(r, {{"K", "60"}, {"lr", "0.01"}}, false);
  CHECK(csv == "# K=60\n# lr=0.01\nepoch,split,loss,accuracy,seconds,eig_count\n1,train,0.5,0.75,0.000000,0\n");
  CHECK(ReportCsv(r, {}, true).find("1.25") != std::string::npos);
}
