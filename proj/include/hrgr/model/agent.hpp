#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hrgr/corpus/templates.hpp"
#include "hrgr/corpus/types.hpp"
#include "hrgr/corpus/vocabulary.hpp"
#include "hrgr/metrics/rewards.hpp"
#include "hrgr/model/network.hpp"
#include "hrgr/numerics/rng.hpp"

namespace hrgr::model {

enum class DecodeMode { Greedy, Sample };

enum class Ablation {
  None,
  RetrievalOnly,   // action 0 masked out; every sentence comes from the template database
  GenerationOnly,  // action 0 forced; the policy is never consulted
};

Ablation parse_ablation(const std::string& s);
std::string to_string(Ablation a);

struct DecodeLimits {
  std::size_t max_sentences = 7;
  std::size_t max_tokens = 15;  // per sentence, EOS included
  double stop_threshold = 0.5;
  friend bool operator==(const DecodeLimits&, const DecodeLimits&) = default;
};

enum class SentenceSource { Retrieved, Generated };

struct SentenceTrace {
  double z = 0.0;
  double logprob_z = 0.0;  // log(1 - z): the decision to continue
  std::size_t action = 0;
  double logprob_action = 0.0;
  corpus::Sentence tokens;  // generated ids map one-to-one onto tokens, specials included
  std::vector<double> token_logprobs;  // generated sentences only, EOS included when emitted
  SentenceSource source = SentenceSource::Generated;
};

struct EpisodeTrace {
  std::vector<SentenceTrace> sentences;
  bool stopped = false;          // stop control fired (as opposed to hitting max_sentences)
  double final_z = 0.0;          // z of the stop step when stopped
  double final_logprob_z = 0.0;  // log z of that step
  metrics::RewardTrace rewards;  // filled in by training
};

// Tape handles behind an EpisodeTrace, for building policy-gradient losses.
struct EpisodeVars {
  struct Sentence {
    num::Var logprob_continue;             // log(1 - z_i)
    std::optional<num::Var> logprob_action;  // absent when the policy was not consulted
    std::vector<num::Var> token_logprobs;
  };
  std::vector<Sentence> sentences;
  std::optional<num::Var> logprob_stop;  // log z at the stop step
  std::vector<num::Var> stop_logits;     // every evaluated stop decision, in order
};

struct Rollout {
  corpus::Report report;
  EpisodeTrace trace;
  EpisodeVars vars;
};

// Chooses a retrieval action from a 1 x n log-probability row. Greedy takes
// the argmax (ties go to the lowest index); Sample draws from exp(row).
struct Decision {
  std::size_t index = 0;
  double logprob = 0.0;
};
Decision retrieval_decide(const num::Array& log_probs, DecodeMode mode, num::Rng& rng);

// Log-probabilities over actions with the ablation applied: RetrievalOnly
// pushes action 0 to effectively -inf, so the row renormalizes over templates.
num::Var policy_log_probs(Network& net, num::Var q, Ablation ablation);

struct GeneratedSentence {
  std::vector<corpus::TokenId> ids;  // without EOS
  bool ended = false;                // EOS was emitted
  std::vector<num::Var> logprobs;    // one per emitted token, EOS included
};

GeneratedSentence generate_sentence(Network& net, const EncodedImage& image, num::Var q, DecodeMode mode,
                                    num::Rng& rng, std::size_t max_tokens);

// Teacher-forced log-probabilities of `ids` (the caller appends EOS if wanted).
std::vector<num::Var> score_sentence(Network& net, const EncodedImage& image, num::Var q,
                                     std::span<const corpus::TokenId> ids);

// Runs the agent on one sample. Greedy mode stops when z >= threshold;
// Sample mode draws the stop decision from Bernoulli(z).
Rollout generate_report(Network& net, const corpus::ReportSample& sample, const corpus::TemplateDatabase& templates,
                        const corpus::Vocabulary& vocab, DecodeMode mode, num::Rng& rng, const DecodeLimits& limits,
                        Ablation ablation = Ablation::None);

// Convenience: greedy decoding on a private tape.
Rollout greedy_report(const ModelParameters& params, const corpus::ReportSample& sample,
                      const corpus::TemplateDatabase& templates, const corpus::Vocabulary& vocab,
                      const DecodeLimits& limits, Ablation ablation = Ablation::None);

}  // namespace hrgr::model
