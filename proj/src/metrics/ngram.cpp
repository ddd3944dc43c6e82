#include "hrgr/metrics/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hrgr/errors.hpp"

namespace hrgr::metrics {

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t max_n) {
  NgramCounts counts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string key;
    for (std::size_t n = 1; n <= max_n && i + n <= tokens.size(); ++n) {
      if (n > 1) key.push_back(' ');
      key += tokens[i + n - 1];
      counts[n - 1][key] += 1.0;
    }
  }
  return counts;
}

NgramStats NgramStats::build(std::span<const Sentence> references) {
  NgramStats stats;
  stats.document_count_ = references.size();
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& ref : references) {
    const auto counts = count_ngrams(ref);
    for (const auto& order : counts) {
      for (const auto& [g, c] : order) ++df[g];
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(stats.document_count_, 1));
  stats.unseen_idf_ = std::log(n);
  stats.idf_.reserve(df.size());
  for (const auto& [g, d] : df) stats.idf_.emplace(g, std::log(n / static_cast<double>(d)));
  return stats;
}

double NgramStats::idf(const std::string& ngram) const {
  auto it = idf_.find(ngram);
  return it == idf_.end() ? unseen_idf_ : it->second;
}

namespace {

struct TfIdf {
  std::array<std::map<std::string, double>, kMaxNgram> vec;
  std::array<double, kMaxNgram> norm{};
};

TfIdf tfidf(std::span<const std::string> tokens, const NgramStats& stats) {
  TfIdf out;
  auto counts = count_ngrams(tokens);
  for (std::size_t n = 0; n < kMaxNgram; ++n) {
    double sq = 0.0;
    for (auto& [g, c] : counts[n]) {
      const double v = c * stats.idf(g);
      sq += v * v;
      out.vec[n].emplace(g, v);
    }
    out.norm[n] = std::sqrt(sq);
  }
  return out;
}

}  // namespace

CiderReference::CiderReference(const Sentence& reference, const NgramStats& stats)
    : stats_(&stats), length_(reference.size()) {
  auto t = tfidf(reference, stats);
  vec_ = std::move(t.vec);
  norm_ = t.norm;
}

double CiderReference::score(std::span<const std::string> candidate, const CiderOptions& options) const {
  if (candidate.empty()) return 0.0;
  const TfIdf cand = tfidf(candidate, *stats_);
  double total = 0.0;
  for (std::size_t n = 0; n < kMaxNgram; ++n) {
    if (cand.norm[n] == 0.0 || norm_[n] == 0.0) continue;
    double dot = 0.0;
    for (const auto& [g, v] : cand.vec[n]) {
      auto it = vec_[n].find(g);
      if (it == vec_[n].end()) continue;
      dot += (options.cider_d ? std::min(v, it->second) : v) * it->second;
    }
    double sim = dot / (cand.norm[n] * norm_[n]);
    if (options.cider_d) {
      const double delta = static_cast<double>(candidate.size()) - static_cast<double>(length_);
      sim *= std::exp(-(delta * delta) / (2.0 * options.sigma * options.sigma));
    }
    total += sim;
  }
  return 10.0 * total / static_cast<double>(kMaxNgram);
}

double cider_document(std::span<const std::string> candidate, const Sentence& reference,
                      const NgramStats& stats, const CiderOptions& options) {
  return CiderReference(reference, stats).score(candidate, options);
}

double cider(std::span<const Sentence> candidates, std::span<const Sentence> references,
             const NgramStats& stats, const CiderOptions& options) {
  if (candidates.size() != references.size()) {
    throw ContractError("cider: " + std::to_string(candidates.size()) + " candidates for " +
                        std::to_string(references.size()) + " references");
  }
  if (candidates.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    total += cider_document(candidates[i], references[i], stats, options);
  }
  return total / static_cast<double>(candidates.size());
}

double bleu(std::span<const Sentence> candidates, std::span<const Sentence> references,
            std::size_t max_n) {
  if (max_n < 1 || max_n > kMaxNgram) throw ContractError("bleu: max_n must be in 1..4");
  if (candidates.size() != references.size()) throw ContractError("bleu: corpus size mismatch");
  std::array<double, kMaxNgram> matched{};
  std::array<double, kMaxNgram> total{};
  double cand_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = count_ngrams(candidates[i], max_n);
    const auto r = count_ngrams(references[i], max_n);
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (std::size_t n = 0; n < max_n; ++n) {
      for (const auto& [g, cnt] : c[n]) {
        total[n] += cnt;
        auto it = r[n].find(g);
        if (it != r[n].end()) matched[n] += std::min(cnt, it->second);
      }
    }
  }
  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const Sentence> candidates, std::span<const Sentence> references,
               double beta) {
  if (candidates.size() != references.size()) throw ContractError("rouge_l: corpus size mismatch");
  if (candidates.empty()) return 0.0;
  double total = 0.0;
  const double b2 = beta * beta;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& r = references[i];
    const std::size_t lcs = lcs_length(c, r);
    if (lcs == 0) continue;
    const double p = static_cast<double>(lcs) / static_cast<double>(c.size());
    const double rec = static_cast<double>(lcs) / static_cast<double>(r.size());
    total += (1.0 + b2) * p * rec / (rec + b2 * p);
  }
  return total / static_cast<double>(candidates.size());
}

}  // namespace hrgr::metrics
