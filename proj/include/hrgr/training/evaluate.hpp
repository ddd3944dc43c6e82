#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hrgr/corpus/templates.hpp"
#include "hrgr/corpus/vocabulary.hpp"
#include "hrgr/metrics/ngram.hpp"
#include "hrgr/model/agent.hpp"
#include "hrgr/training/config.hpp"

namespace hrgr::training {

struct MetricSet {
  double cider = 0.0;
  double bleu[4] = {0, 0, 0, 0};
  double rouge_l = 0.0;
  double precision = 0.0;
  bool precision_defined = false;
  double afp = 0.0;
  nlohmann::json to_json() const;
};

struct SampleOutput {
  std::string id;
  corpus::Report report;         // as decoded
  corpus::Report postprocessed;  // after keyword post-processing (equal to report when disabled)
  std::vector<std::size_t> actions;  // 0 = generated, k = template group k
};

struct EvalResult {
  MetricSet metrics;      // headline: on post-processed reports when post-processing is enabled
  MetricSet metrics_raw;  // on reports as decoded
  double retrieval_fraction = 0.0;
  double generation_fraction = 0.0;
  bool action_mix_defined = false;  // at least one sentence was emitted
  double mean_sentences = 0.0;
  double gold_mean_sentences = 0.0;
  std::size_t n_samples = 0;
  std::vector<SampleOutput> outputs;
  nlohmann::json to_json() const;  // metrics only; outputs are written separately
};

// Scores given predictions against the samples' gold reports. CIDEr idf comes
// from `idf_stats`, which should be built from the training split.
EvalResult score_predictions(std::span<const corpus::ReportSample> samples, std::vector<SampleOutput> outputs,
                             const metrics::NgramStats& idf_stats, std::span<const std::string> terms,
                             const TrainConfig& config);

// Greedy decoding of every sample, then score_predictions.
EvalResult evaluate_split(std::span<const corpus::ReportSample> samples, const model::ModelParameters& params,
                          const corpus::TemplateDatabase& templates, const corpus::Vocabulary& vocab,
                          const metrics::NgramStats& idf_stats, std::span<const std::string> terms,
                          const TrainConfig& config, model::Ablation ablation = model::Ablation::None);

// idf over the flattened gold reports.
metrics::NgramStats report_stats(std::span<const corpus::ReportSample> samples);

}  // namespace hrgr::training
