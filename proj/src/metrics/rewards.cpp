#include "hrgr/metrics/rewards.hpp"

#include "hrgr/errors.hpp"

namespace hrgr::metrics {

double sentence_reward(std::span<const Sentence> prefix, const Sentence& gt_report,
                       const NgramStats& stats, const CiderOptions& options) {
  if (prefix.empty()) throw ContractError("sentence_reward: prefix must hold at least one sentence");
  const CiderReference ref(gt_report, stats);
  const auto with = corpus::flatten(Report(prefix.begin(), prefix.end()));
  const auto without = corpus::flatten(Report(prefix.begin(), prefix.end() - 1));
  return ref.score(with, options) - ref.score(without, options);
}

double word_reward(std::span<const std::string> prefix, const Sentence& gt_sentence,
                   const NgramStats& stats, const CiderOptions& options) {
  if (prefix.empty()) throw ContractError("word_reward: prefix must hold at least one word");
  if (gt_sentence.empty()) return 0.0;
  const CiderReference ref(gt_sentence, stats);
  return ref.score(prefix, options) - ref.score(prefix.first(prefix.size() - 1), options);
}

std::vector<double> sentence_rewards(std::span<const Sentence> report, const CiderReference& gt_report,
                                     const CiderOptions& options) {
  std::vector<double> out;
  out.reserve(report.size());
  Sentence running;
  double previous = 0.0;
  for (const auto& sentence : report) {
    running.insert(running.end(), sentence.begin(), sentence.end());
    const double current = gt_report.score(running, options);
    out.push_back(current - previous);
    previous = current;
  }
  return out;
}

std::vector<double> word_rewards(std::span<const std::string> sentence, const CiderReference& gt_sentence,
                                 const CiderOptions& options) {
  std::vector<double> out;
  out.reserve(sentence.size());
  double previous = 0.0;
  for (std::size_t t = 1; t <= sentence.size(); ++t) {
    const double current = gt_sentence.score(sentence.first(t), options);
    out.push_back(current - previous);
    previous = current;
  }
  return out;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("discounted_returns: gamma must be in [0,1]");
  std::vector<double> out(rewards.size(), 0.0);
  double next = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    out[t] = rewards[t] + gamma * next;
    next = out[t];
  }
  return out;
}

}  // namespace hrgr::metrics
