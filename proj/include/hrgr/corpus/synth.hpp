#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hrgr/corpus/types.hpp"
#include "hrgr/numerics/rng.hpp"

namespace hrgr::corpus {

// Knobs for the compositional abnormal-sentence grammar:
//   there is <severity> <location> <term> [<evidence clause>] .
struct GrammarConfig {
  std::vector<std::string> severities = {"mild", "moderate", "severe"};
  bool evidence_clause = true;

  friend bool operator==(const GrammarConfig&, const GrammarConfig&) = default;
};

struct SynthConfig {
  std::size_t n_samples = 2000;
  std::size_t n_normal_findings = 6;    // report topics with a normal template, max 8
  std::size_t n_abnormal_findings = 8;  // grammar finding terms, max 10
  std::size_t regions = 16;             // P
  std::size_t feature_dim = 32;         // D
  double noise_sigma = 0.5;
  std::size_t template_variant_count = 3;  // 1..4 phrasings per normal topic
  double abnormal_rate = 0.12;             // per-finding prevalence
  double mention_rate = 0.9;               // chance a normal topic is written at all
  std::size_t max_sentences = 7;
  std::size_t max_tokens = 15;  // including the EOS appended at encode time
  GrammarConfig grammar;

  void validate() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Finding terms the grammar can emit, in finding order (first n of them).
std::vector<std::string> abnormal_term_list(std::size_t n_abnormal_findings);

// Default post-processing keywords and the normal sentence each maps to,
// taken from the normal-topic phrasings.
std::vector<std::pair<std::string, std::string>> default_keyword_map();

// Draws n_samples reports. Each sample draws a binary finding vector (topic
// mentioned / abnormal finding present); its features are a region-specific
// linear map of that vector plus Gaussian noise. Normal topics emit one
// phrasing of their template; abnormal findings replace their topic's
// sentence with a grammar sentence.
std::vector<ReportSample> synth_generate(const SynthConfig& config, num::Rng& rng);

// Fraction of gold sentences that are normal-topic phrasings.
double template_sentence_fraction(const std::vector<ReportSample>& samples);

}  // namespace hrgr::corpus
