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

#ifndef SCNN_CORPUS_H_
#define SCNN_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace scnn {

inline constexpr std::size_t kDefaultVocabularySize = 1000;

enum class SignalMode { kRawCount, kLogNormalized };

struct Document {
  std::vector<std::string> tokens;
  int label = 0;
};

// Ordered word list with its inverse index. Node n of every graph built over
// this vocabulary corresponds to word n.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws DataError on duplicate words.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::optional<std::size_t> Find(std::string_view word) const;
  bool Contains(std::string_view word) const { return Find(word).has_value(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  int num_classes = 0;
  SignalMode signal_mode = SignalMode::kLogNormalized;
  // Cap used when the vocabulary was built; derived corpora reuse it.
  std::size_t vocabulary_cap = kDefaultVocabularySize;
  // False when the source file carried no labels.
  bool labeled = true;

  std::size_t size() const { return documents.size(); }
  std::vector<std::size_t> ClassCounts() const;
};

// Document signals stacked as columns of an N x M matrix.
struct Dataset {
  Eigen::MatrixXd signals;
  std::vector<int> labels;
  int num_classes = 0;
  // Documents skipped because none of their tokens were in the vocabulary.
  std::size_t dropped = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t nodes() const { return static_cast<std::size_t>(signals.rows()); }
};

// Lowercases ASCII letters and splits on every non-alphanumeric byte.
std::vector<std::string> Tokenize(std::string_view raw_text);

// The max_size most frequent tokens, by descending count then
// lexicographically. Throws DataError when the documents hold no tokens.
Vocabulary BuildVocabulary(std::span<const Document> docs,
                           std::size_t max_size = kDefaultVocabularySize);

// Per-word counts (or ln(1 + count)); tokens outside the vocabulary are
// ignored.
Eigen::VectorXd ToSignal(const Document& doc, const Vocabulary& vocab,
                         SignalMode mode);

// Builds the vocabulary and validates labels against num_classes. When
// num_classes is zero it is inferred as max label + 1 and every class in
// between must be present.
Corpus MakeCorpus(std::vector<Document> docs,
                  std::size_t max_vocab = kDefaultVocabularySize,
                  SignalMode mode = SignalMode::kLogNormalized,
                  int num_classes = 0);

// Signals of the corpus documents against an arbitrary vocabulary (usually
// the node order of a graph). All-OOV documents are dropped and counted.
Dataset BuildDataset(const Corpus& corpus, const Vocabulary& vocab);

// Same documents, labels and settings; vocabulary rebuilt from the subset.
Corpus SubsetCorpus(const Corpus& corpus, std::span<const std::size_t> indices);

// Stratified split into (train, test). Every class keeps at least one train
// document when it has any.
std::pair<Corpus, Corpus> SplitCorpus(const Corpus& corpus,
                                      double test_fraction, uint64_t seed);

struct SynthOptions {
  // Documents per synthetic corpus; zero means half of the base corpus.
  std::size_t docs_per_corpus = 0;
};

// Generates a pair of corpora from one base corpus. Per class, a shared pool
// of round(overlap * n) documents goes to both corpora and each corpus gets
// its own private pool for the rest. A fraction (1 - overlap) of the base
// word types is private to the second corpus: inside its private documents
// those words are renamed to fresh tokens, so lower overlap means less
// shared vocabulary as well as fewer shared documents.
std::pair<Corpus, Corpus> SynthesizePair(const Corpus& base, double overlap,
                                         uint64_t seed,
                                         const SynthOptions& options = {});

// One JSON object per line: {"label": int, "text": string}. A file whose
// records carry no "label" loads as an unlabeled single-class corpus.
Corpus LoadCorpus(const std::string& path,
                  std::size_t max_vocab = kDefaultVocabularySize,
                  SignalMode mode = SignalMode::kLogNormalized);
void SaveCorpus(const Corpus& corpus, const std::string& path);

Vocabulary LoadVocabulary(const std::string& path);
void SaveVocabulary(const Vocabulary& vocab, const std::string& path);

}  // namespace scnn

#endif  // SCNN_CORPUS_H_
