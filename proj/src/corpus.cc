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

#include "scnn/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scnn/error.h"
#include "scnn/io.h"
#include "scnn/random.h"

namespace scnn {

Vocabulary::Vocabulary(std::vector<std::string> words)
    : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw DataError("duplicate vocabulary word: " + words_[i]);
    }
  }
}

std::optional<std::size_t> Vocabulary::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Corpus::ClassCounts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const Document& d : documents) ++counts[static_cast<std::size_t>(d.label)];
  return counts;
}

std::vector<std::string> Tokenize(std::string_view raw_text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : raw_text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128 && std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary BuildVocabulary(std::span<const Document> docs,
                           std::size_t max_size) {
  if (docs.empty()) throw DataError("cannot build a vocabulary from no documents");
  std::unordered_map<std::string, std::size_t> counts;
  for (const Document& d : docs) {
    for (const std::string& t : d.tokens) ++counts[t];
  }
  if (counts.empty()) throw DataError("documents contain no tokens");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);

  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, c] : ranked) words.push_back(w);
  return Vocabulary(std::move(words));
}

Eigen::VectorXd ToSignal(const Document& doc, const Vocabulary& vocab,
                         SignalMode mode) {
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  for (const std::string& t : doc.tokens) {
    if (auto n = vocab.Find(t)) signal[static_cast<Eigen::Index>(*n)] += 1.0;
  }
  if (mode == SignalMode::kLogNormalized) {
    for (Eigen::Index i = 0; i < signal.size(); ++i) signal[i] = std::log1p(signal[i]);
  }
  return signal;
}

Corpus MakeCorpus(std::vector<Document> docs, std::size_t max_vocab,
                  SignalMode mode, int num_classes) {
  if (docs.empty()) throw DataError("corpus has no documents");
  int max_label = -1;
  for (const Document& d : docs) {
    if (d.label < 0) throw DataError("negative class label");
    if (d.tokens.empty()) throw DataError("document with no tokens");
    max_label = std::max(max_label, d.label);
  }
  if (num_classes == 0) {
    num_classes = max_label + 1;
    std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
    for (const Document& d : docs) seen[static_cast<std::size_t>(d.label)] = true;
    for (int c = 0; c < num_classes; ++c) {
      if (!seen[static_cast<std::size_t>(c)]) {
        throw DataError("class labels are not contiguous: class " +
                        std::to_string(c) + " has no documents");
      }
    }
  } else if (max_label >= num_classes) {
    throw DataError("label " + std::to_string(max_label) +
                    " out of range for " + std::to_string(num_classes) +
                    " classes");
  }

  Corpus corpus;
  corpus.vocabulary = BuildVocabulary(docs, max_vocab);
  corpus.documents = std::move(docs);
  corpus.num_classes = num_classes;
  corpus.signal_mode = mode;
  corpus.vocabulary_cap = max_vocab;
  return corpus;
}

Dataset BuildDataset(const Corpus& corpus, const Vocabulary& vocab) {
  if (vocab.empty()) throw DataError("empty vocabulary");
  std::vector<Eigen::VectorXd> kept;
  Dataset data;
  data.num_classes = corpus.num_classes;
  kept.reserve(corpus.size());
  for (const Document& d : corpus.documents) {
    Eigen::VectorXd s = ToSignal(d, vocab, corpus.signal_mode);
    if (s.isZero(0.0)) {
      ++data.dropped;
      continue;
    }
    kept.push_back(std::move(s));
    data.labels.push_back(d.label);
  }
  data.signals.resize(static_cast<Eigen::Index>(vocab.size()),
                      static_cast<Eigen::Index>(kept.size()));
  for (std::size_t m = 0; m < kept.size(); ++m) {
    data.signals.col(static_cast<Eigen::Index>(m)) = kept[m];
  }
  return data;
}

Corpus SubsetCorpus(const Corpus& corpus, std::span<const std::size_t> indices) {
  std::vector<Document> docs;
  docs.reserve(indices.size());
  for (std::size_t i : indices) docs.push_back(corpus.documents.at(i));
  Corpus out = MakeCorpus(std::move(docs), corpus.vocabulary_cap,
                          corpus.signal_mode, corpus.num_classes);
  out.labeled = corpus.labeled;
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> IndicesByClass(const Corpus& corpus) {
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(corpus.num_classes));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_class[static_cast<std::size_t>(corpus.documents[i].label)].push_back(i);
  }
  return by_class;
}

}  // namespace

std::pair<Corpus, Corpus> SplitCorpus(const Corpus& corpus,
                                      double test_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  Rng rng = Rng::Stream(seed, "split");
  std::vector<std::size_t> train, test;
  for (auto& members : IndicesByClass(corpus)) {
    rng.Shuffle(members);
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    if (!members.empty()) n_test = std::min(n_test, members.size() - 1);
    test.insert(test.end(), members.begin(),
                members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(),
                 members.begin() + static_cast<std::ptrdiff_t>(n_test),
                 members.end());
  }
  if (test.empty()) throw DataError("test split is empty");
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {SubsetCorpus(corpus, train), SubsetCorpus(corpus, test)};
}

std::pair<Corpus, Corpus> SynthesizePair(const Corpus& base, double overlap,
                                         uint64_t seed,
                                         const SynthOptions& options) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw ConfigError("overlap must lie in [0, 1]");
  }
  if (base.num_classes < 2) throw DataError("synthesis needs at least 2 classes");
  const std::size_t per_corpus =
      options.docs_per_corpus ? options.docs_per_corpus : base.size() / 2;
  if (per_corpus == 0) throw DataError("base corpus too small to split");

  Rng doc_rng = Rng::Stream(seed, "synth-docs");
  std::vector<std::size_t> first_idx, second_idx, second_private;
  for (auto& members : IndicesByClass(base)) {
    doc_rng.Shuffle(members);
    // Class share of the requested size, proportional to the base.
    const auto n = static_cast<std::size_t>(std::llround(
        static_cast<double>(per_corpus) * static_cast<double>(members.size()) /
        static_cast<double>(base.size())));
    const auto shared =
        static_cast<std::size_t>(std::llround(overlap * static_cast<double>(n)));
    const std::size_t priv = n - shared;
    if (shared + 2 * priv > members.size()) {
      throw DataError("overlap " + std::to_string(overlap) + " needs " +
                      std::to_string(shared + 2 * priv) +
                      " documents in a class that has " +
                      std::to_string(members.size()));
    }
    auto at = [&](std::size_t k) { return members[k]; };
    for (std::size_t k = 0; k < shared; ++k) {
      first_idx.push_back(at(k));
      second_idx.push_back(at(k));
    }
    for (std::size_t k = 0; k < priv; ++k) {
      first_idx.push_back(at(shared + k));
      second_private.push_back(at(shared + priv + k));
    }
  }

  // Word types private to the second corpus.
  std::set<std::string> types;
  for (const Document& d : base.documents) types.insert(d.tokens.begin(), d.tokens.end());
  std::vector<std::string> ordered(types.begin(), types.end());
  Rng word_rng = Rng::Stream(seed, "synth-words");
  word_rng.Shuffle(ordered);
  const auto n_private = static_cast<std::size_t>(
      std::llround((1.0 - overlap) * static_cast<double>(ordered.size())));
  std::unordered_map<std::string, std::string> rename;
  std::set<std::string> taken = types;
  for (std::size_t k = 0; k < n_private; ++k) {
    std::string alias = ordered[k] + "v";
    while (taken.count(alias)) alias += "v";
    taken.insert(alias);
    rename.emplace(ordered[k], std::move(alias));
  }

  std::vector<Document> first, second;
  for (std::size_t i : first_idx) first.push_back(base.documents[i]);
  for (std::size_t i : second_idx) second.push_back(base.documents[i]);
  for (std::size_t i : second_private) {
    Document d = base.documents[i];
    for (std::string& t : d.tokens) {
      if (auto it = rename.find(t); it != rename.end()) t = it->second;
    }
    second.push_back(std::move(d));
  }
  return {MakeCorpus(std::move(first), base.vocabulary_cap, base.signal_mode,
                     base.num_classes),
          MakeCorpus(std::move(second), base.vocabulary_cap, base.signal_mode,
                     base.num_classes)};
}

Corpus LoadCorpus(const std::string& path, std::size_t max_vocab,
                  SignalMode mode) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0, records = 0, with_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++records;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("text") ||
        !record["text"].is_string()) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": record needs a string \"text\" field");
    }
    Document doc;
    doc.tokens = Tokenize(record["text"].get<std::string>());
    if (record.contains("label")) {
      if (!record["label"].is_number_integer()) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": \"label\" must be an integer");
      }
      doc.label = record["label"].get<int>();
      ++with_label;
    }
    if (!doc.tokens.empty()) docs.push_back(std::move(doc));
  }
  if (with_label != 0 && with_label != records) {
    throw DataError(path + ": some records lack a label");
  }
  Corpus corpus = MakeCorpus(std::move(docs), max_vocab, mode);
  corpus.labeled = with_label > 0;
  return corpus;
}

void SaveCorpus(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const Document& d : corpus.documents) {
    std::string text;
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (i) text.push_back(' ');
      text += d.tokens[i];
    }
    nlohmann::json record = {{"text", text}};
    if (corpus.labeled) record["label"] = d.label;
    out += record.dump();
    out.push_back('\n');
  }
  WriteFileAtomic(path, out);
}

Vocabulary LoadVocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

void SaveVocabulary(const Vocabulary& vocab, const std::string& path) {
  std::string out;
  for (const std::string& w : vocab.words()) {
    out += w;
    out.push_back('\n');
  }
  WriteFileAtomic(path, out);
}

}  // namespace scnn
