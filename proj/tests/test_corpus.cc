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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "scnn/corpus.h"
#include "scnn/error.h"
#include "scnn/graph.h"
#include "scnn/io.h"
#include "scnn/similarity.h"
#include "support.h"

using namespace scnn;
using namespace scnn::testing;

namespace {

std::string TempPath(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "scnn_test_corpus";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

// Two topics over shared background words.
Corpus TopicCorpus(std::size_t docs, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Document> out;
  for (std::size_t d = 0; d < docs; ++d) {
    const int label = static_cast<int>(d % 2);
    std::vector<std::string> tokens;
    for (int t = 0; t < 12; ++t) {
      const int u = std::uniform_int_distribution<int>(0, 9)(rng);
      if (u < 5) {
        tokens.push_back((label ? "x" : "y") + std::to_string(std::uniform_int_distribution<int>(0, 7)(rng)));
      } else {
        tokens.push_back("bg" + std::to_string(std::uniform_int_distribution<int>(0, 11)(rng)));
      }
    }
    out.push_back(Doc(tokens, label));
  }
  return MakeCorpus(out);
}

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(Tokenize("The cat sat.") == std::vector<std::string>{"the", "cat", "sat"});
  CHECK(Tokenize("").empty());
  CHECK(Tokenize("A-B a_b 42") == std::vector<std::string>{"a", "b", "a", "b", "42"});
  CHECK(Tokenize("  ...  ").empty());
}

TEST_CASE("tokenize is idempotent on rejoined output") {
  std::mt19937_64 rng(1);
  const std::string alphabet = "abcXYZ019 .,;-_!\t\n";
  for (int t = 0; t < 200; ++t) {
    std::string s;
    const int len = std::uniform_int_distribution<int>(0, 40)(rng);
    for (int i = 0; i < len; ++i) s.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
    const auto once = Tokenize(s);
    std::string joined;
    for (const auto& w : once) joined += w + " ";
    CHECK(Tokenize(joined) == once);
  }
}

TEST_CASE("vocabulary ordering") {
  const std::vector<Document> d1{Doc({"a", "a", "b", "a"})};
  CHECK(BuildVocabulary(d1, 10).words() == std::vector<std::string>{"a", "b"});
  const std::vector<Document> d2{Doc({"b", "a", "b", "a"})};
  CHECK(BuildVocabulary(d2, 2).words() == std::vector<std::string>{"a", "b"});
  const std::vector<Document> d3{Doc({"c", "a", "b", "a"}), Doc({"a", "b", "c", "a", "b", "a", "b", "c"})};
  CHECK(BuildVocabulary(d3, 2).words() == std::vector<std::string>{"a", "b"});
  const std::vector<Document> none{Doc({})};
  CHECK_THROWS_AS(BuildVocabulary(none, 3), DataError);
}

TEST_CASE("vocabulary matches a brute-force count and ignores document order") {
  std::mt19937_64 rng(2);
  std::vector<Document> docs;
  for (int d = 0; d < 30; ++d) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 10; ++t) tokens.push_back("t" + std::to_string(std::uniform_int_distribution<int>(0, 25)(rng)));
    docs.push_back(Doc(tokens));
  }
  std::map<std::string, int> counts;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) ++counts[t];
  }
  std::vector<std::pair<int, std::string>> ranked;
  for (const auto& [w, c] : counts) ranked.emplace_back(-c, w);
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> expect;
  for (std::size_t i = 0; i < 12; ++i) expect.push_back(ranked[i].second);
  CHECK(BuildVocabulary(docs, 12).words() == expect);
  std::shuffle(docs.begin(), docs.end(), rng);
  CHECK(BuildVocabulary(docs, 12).words() == expect);
}

TEST_CASE("vocabulary rejects duplicates and inverts its index") {
  CHECK_THROWS_AS(Vocabulary({"a", "b", "a"}), DataError);
  const Vocabulary v({"x", "y", "z"});
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.Find(v.word(i)) == i);
  CHECK(!v.Find("w").has_value());
}

TEST_CASE("signals") {
  const Vocabulary v({"a", "b", "c"});
  const Eigen::VectorXd raw = ToSignal(Doc({"a", "a", "b"}), v, SignalMode::kRawCount);
  CHECK(raw == Eigen::Vector3d(2, 1, 0));
  CHECK(ToSignal(Doc({"z"}), Vocabulary({"a"}), SignalMode::kRawCount) == Eigen::VectorXd::Zero(1));
  const Eigen::VectorXd log = ToSignal(Doc({"a", "a", "b"}), v, SignalMode::kLogNormalized);
  CHECK(std::abs(log[0] - std::log(3.0)) < 1e-15);
  CHECK(std::abs(log[1] - std::log(2.0)) < 1e-15);
  CHECK(log[2] == 0.0);
}

TEST_CASE("raw-count signals are additive under concatenation") {
  std::mt19937_64 rng(3);
  const Vocabulary v = Words(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::string> a, b;
    for (int i = 0; i < 7; ++i) a.push_back("w" + std::to_string(std::uniform_int_distribution<int>(0, 10)(rng)));
    for (int i = 0; i < 5; ++i) b.push_back("w" + std::to_string(std::uniform_int_distribution<int>(0, 10)(rng)));
    std::vector<std::string> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(ToSignal(Doc(ab), v, SignalMode::kRawCount) ==
          ToSignal(Doc(a), v, SignalMode::kRawCount) + ToSignal(Doc(b), v, SignalMode::kRawCount));
  }
}

TEST_CASE("corpus construction validates labels") {
  const Corpus c = MakeCorpus({Doc({"a"}, 0), Doc({"b"}, 2), Doc({"c"}, 1)});
  CHECK(c.num_classes == 3);
  CHECK(c.ClassCounts() == std::vector<std::size_t>{1, 1, 1});
  CHECK_THROWS_AS(MakeCorpus({Doc({"a"}, 0), Doc({"b"}, 2)}), DataError);
  CHECK_THROWS_AS(MakeCorpus({Doc({"a"}, -1)}), DataError);
  CHECK_THROWS_AS(MakeCorpus({Doc({"a"}, 3)}, 10, SignalMode::kRawCount, 2), DataError);
}

TEST_CASE("datasets drop documents without in-vocabulary tokens") {
  const Corpus c = MakeCorpus({Doc({"a", "b"}, 0), Doc({"zz"}, 1), Doc({"b"}, 1)}, 10, SignalMode::kRawCount);
  const Dataset d = BuildDataset(c, Vocabulary({"a", "b"}));
  CHECK(d.size() == 2);
  CHECK(d.dropped == 1);
  CHECK(d.labels == std::vector<int>{0, 1});
  CHECK(d.signals.col(0) == Eigen::Vector2d(1, 1));
}

TEST_CASE("stratified split is deterministic and disjoint") {
  const Corpus c = TopicCorpus(101, 4);
  const auto [train, test] = SplitCorpus(c, 0.2, 9);
  const auto [train2, test2] = SplitCorpus(c, 0.2, 9);
  CHECK(train.size() + test.size() == c.size());
  CHECK(test.size() == 20);
  CHECK(test.ClassCounts() == std::vector<std::size_t>{10, 10});
  CHECK(train.vocabulary == train2.vocabulary);
  CHECK(test2.size() == test.size());
  CHECK_THROWS_AS(SplitCorpus(c, 0.0, 1), ConfigError);
}

TEST_CASE("synthetic pairs: extremes and determinism") {
  const Corpus base = TopicCorpus(200, 5);
  SUBCASE("full overlap gives identical corpora") {
    const auto [a, b] = SynthesizePair(base, 1.0, 3);
    CHECK(a.size() == 100);
    CHECK(a.vocabulary == b.vocabulary);
    CHECK(CorpusCorr(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero overlap gives disjoint document pools") {
    const auto [a, b] = SynthesizePair(base, 0.0, 3);
    std::multiset<std::vector<std::string>> in_a;
    for (const auto& d : a.documents) in_a.insert(d.tokens);
    // Every word of the second corpus is renamed, so nothing is shared.
    for (const auto& d : b.documents) CHECK(in_a.count(d.tokens) == 0);
    std::size_t shared_words = 0;
    for (const auto& w : b.vocabulary.words()) shared_words += a.vocabulary.Contains(w);
    CHECK(shared_words == 0);
  }
  SUBCASE("same seed, same pair") {
    const auto [a1, b1] = SynthesizePair(base, 0.5, 11);
    const auto [a2, b2] = SynthesizePair(base, 0.5, 11);
    SaveCorpus(a1, TempPath("a1.jsonl"));
    SaveCorpus(a2, TempPath("a2.jsonl"));
    SaveCorpus(b1, TempPath("b1.jsonl"));
    SaveCorpus(b2, TempPath("b2.jsonl"));
    CHECK(ReadFile(TempPath("a1.jsonl")) == ReadFile(TempPath("a2.jsonl")));
    CHECK(ReadFile(TempPath("b1.jsonl")) == ReadFile(TempPath("b2.jsonl")));
  }
  SUBCASE("too many documents requested") {
    CHECK_THROWS_AS(SynthesizePair(base, 0.0, 1, SynthOptions{150}), DataError);
    CHECK_THROWS_AS(SynthesizePair(base, 1.5, 1), ConfigError);
  }
}

TEST_CASE("higher overlap gives higher mean similarity") {
  const Corpus base = TopicCorpus(300, 6);
  double high = 0.0, low = 0.0, high_corr = 0.0, low_corr = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto [a8, b8] = SynthesizePair(base, 0.8, seed);
    const auto [a2, b2] = SynthesizePair(base, 0.2, seed);
    high += GraphSimUnion(Coge(a8), Coge(b8));
    low += GraphSimUnion(Coge(a2), Coge(b2));
    high_corr += CorpusCorr(a8, b8);
    low_corr += CorpusCorr(a2, b2);
  }
  CHECK(high > low);
  CHECK(high_corr > low_corr);
}

TEST_CASE("corpus files") {
  const std::string path = TempPath("labeled.jsonl");
  WriteFileAtomic(path, "{\"label\": 1, \"text\": \"Hello, world\"}\n\n{\"label\": 0, \"text\": \"bye world\"}\n");
  const Corpus c = LoadCorpus(path);
  CHECK(c.labeled);
  CHECK(c.size() == 2);
  CHECK(c.documents[0].tokens == std::vector<std::string>{"hello", "world"});
  CHECK(c.vocabulary.word(0) == "world");
  SaveCorpus(c, TempPath("copy.jsonl"));
  const Corpus r = LoadCorpus(TempPath("copy.jsonl"));
  CHECK(r.vocabulary == c.vocabulary);
  CHECK(r.documents[1].label == 0);

  WriteFileAtomic(TempPath("unlabeled.jsonl"), "{\"text\": \"a b\"}\n{\"text\": \"b c\"}\n");
  const Corpus u = LoadCorpus(TempPath("unlabeled.jsonl"));
  CHECK(!u.labeled);
  CHECK(u.num_classes == 1);
  SaveCorpus(u, TempPath("unlabeled_copy.jsonl"));
  CHECK(!LoadCorpus(TempPath("unlabeled_copy.jsonl")).labeled);

  WriteFileAtomic(TempPath("mixed.jsonl"), "{\"text\": \"a b\", \"label\": 0}\n{\"text\": \"b c\"}\n");
  CHECK_THROWS_AS(LoadCorpus(TempPath("mixed.jsonl")), DataError);
  WriteFileAtomic(TempPath("broken.jsonl"), "{\"text\": \n");
  CHECK_THROWS_AS(LoadCorpus(TempPath("broken.jsonl")), DataError);
  CHECK_THROWS_AS(LoadCorpus(TempPath("missing.jsonl")), DataError);

  SaveVocabulary(c.vocabulary, TempPath("vocab.txt"));
  CHECK(LoadVocabulary(TempPath("vocab.txt")) == c.vocabulary);
}
