#include "hrgr/metrics/term_detection.hpp"

#include <algorithm>

#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/errors.hpp"

namespace hrgr::metrics {

bool mentions(const corpus::Report& report, const corpus::Sentence& term_tokens) {
  if (term_tokens.empty()) return false;
  const auto flat = corpus::flatten(report);
  return std::search(flat.begin(), flat.end(), term_tokens.begin(), term_tokens.end()) != flat.end();
}

TermDetection term_detection(std::span<const corpus::Report> predictions,
                             std::span<const corpus::Report> gold,
                             std::span<const std::string> terms) {
  if (predictions.size() != gold.size()) throw ContractError("term_detection: corpus size mismatch");
  if (terms.empty()) throw ContractError("term_detection: term list must be nonempty");
  TermDetection out;
  std::size_t predicted = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& term : terms) {
    const auto tokens = corpus::tokenize(term);
    TermCounts counts;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const bool p = mentions(predictions[i], tokens);
      const bool g = mentions(gold[i], tokens);
      counts.gold += g ? 1 : 0;
      if (!p) continue;
      ++counts.predicted;
      if (g) {
        ++counts.true_positive;
      } else {
        ++counts.false_positive;
      }
    }
    predicted += counts.predicted;
    tp += counts.true_positive;
    fp += counts.false_positive;
    out.per_term[term] = counts;
  }
  out.precision_defined = predicted > 0;
  out.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  out.afp = predictions.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(predictions.size());
  return out;
}

}  // namespace hrgr::metrics
