#pragma once

#include <span>
#include <vector>

#include "hrgr/corpus/types.hpp"
#include "hrgr/metrics/ngram.hpp"

namespace hrgr::metrics {

using corpus::Report;

// Rewards of one episode. word_rewards/returns_g hold one list per emitted
// sentence; lists for retrieved sentences are empty.
struct RewardTrace {
  std::vector<double> sentence_rewards;
  std::vector<std::vector<double>> word_rewards;
  std::vector<double> returns_r;
  std::vector<std::vector<double>> returns_g;
  double gamma = 1.0;
};

// Delta-CIDEr of the last sentence of `prefix` against the full ground-truth
// report: f(prefix) - f(prefix without its last sentence), with f(empty) = 0.
double sentence_reward(std::span<const Sentence> prefix, const Sentence& gt_report,
                       const NgramStats& stats, const CiderOptions& options = {});

// Delta-CIDEr of the last word of `prefix` against the aligned ground-truth
// sentence. An empty gt sentence yields 0.
double word_reward(std::span<const std::string> prefix, const Sentence& gt_sentence,
                   const NgramStats& stats, const CiderOptions& options = {});

// All per-sentence deltas of a report in one pass (sums to f(report)).
std::vector<double> sentence_rewards(std::span<const Sentence> report, const CiderReference& gt_report,
                                     const CiderOptions& options = {});
// All per-word deltas of one sentence in one pass (sums to f(sentence)).
std::vector<double> word_rewards(std::span<const std::string> sentence, const CiderReference& gt_sentence,
                                 const CiderOptions& options = {});

// returns[t] = rewards[t] + gamma * returns[t+1], with returns past the end = 0.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

}  // namespace hrgr::metrics
