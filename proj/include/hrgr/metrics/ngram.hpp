#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hrgr/corpus/types.hpp"

namespace hrgr::metrics {

using corpus::Sentence;

inline constexpr std::size_t kMaxNgram = 4;

// n-gram (n = 1..4) -> count within one token sequence. Keys join the tokens
// with a single space.
using NgramCounts = std::array<std::map<std::string, double>, kMaxNgram>;
NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t max_n = kMaxNgram);

// Inverse document frequencies over a reference corpus.
class NgramStats {
 public:
  NgramStats() = default;
  static NgramStats build(std::span<const Sentence> references);

  // log(document_count / df(g)); n-grams never seen in the references are
  // treated as df = 1.
  double idf(const std::string& ngram) const;
  std::size_t document_count() const { return document_count_; }
  std::size_t size() const { return idf_.size(); }

 private:
  std::unordered_map<std::string, double> idf_;
  std::size_t document_count_ = 0;
  double unseen_idf_ = 0.0;
};

struct CiderOptions {
  bool cider_d = false;  // clipped numerator + Gaussian length penalty
  double sigma = 6.0;    // CIDEr-D length penalty width
};

// Precomputed tf-idf vectors of one reference, reusable across many candidate
// evaluations (rewards score many prefixes against the same reference).
class CiderReference {
 public:
  CiderReference(const Sentence& reference, const NgramStats& stats);
  double score(std::span<const std::string> candidate, const CiderOptions& options = {}) const;

 private:
  const NgramStats* stats_;
  std::array<std::map<std::string, double>, kMaxNgram> vec_;
  std::array<double, kMaxNgram> norm_{};
  std::size_t length_ = 0;
};

// CIDEr of one candidate against one reference:
// 10 * mean_n cos(tfidf_n(candidate), tfidf_n(reference)). An empty candidate scores 0.
double cider_document(std::span<const std::string> candidate, const Sentence& reference,
                      const NgramStats& stats, const CiderOptions& options = {});

// Mean per-document CIDEr; candidates[i] is scored against references[i].
double cider(std::span<const Sentence> candidates, std::span<const Sentence> references,
             const NgramStats& stats, const CiderOptions& options = {});

// Corpus BLEU with clipped n-gram precision, geometric mean over 1..max_n and
// brevity penalty exp(1 - r/c) when c < r. No smoothing.
double bleu(std::span<const Sentence> candidates, std::span<const Sentence> references,
            std::size_t max_n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Mean ROUGE-L F-measure, F = (1 + b^2) P R / (R + b^2 P).
double rouge_l(std::span<const Sentence> candidates, std::span<const Sentence> references,
               double beta = 1.2);

}  // namespace hrgr::metrics
