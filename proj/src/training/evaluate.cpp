#include "hrgr/training/evaluate.hpp"

#include "hrgr/errors.hpp"
#include "hrgr/metrics/term_detection.hpp"
#include "hrgr/training/postprocess.hpp"

namespace hrgr::training {

using nlohmann::json;

json MetricSet::to_json() const {
  json j{{"cider", cider},   {"bleu1", bleu[0]}, {"bleu2", bleu[1]}, {"bleu3", bleu[2]},
         {"bleu4", bleu[3]}, {"rouge_l", rouge_l}, {"afp", afp}};
  j["precision"] = precision_defined ? json(precision) : json(nullptr);
  return j;
}

json EvalResult::to_json() const {
  return json{{"n_samples", n_samples},
              {"metrics", metrics.to_json()},
              {"metrics_raw", metrics_raw.to_json()},
              {"retrieval_fraction", retrieval_fraction},
              {"generation_fraction", generation_fraction},
              {"mean_sentences", mean_sentences},
              {"gold_mean_sentences", gold_mean_sentences}};
}

namespace {

MetricSet score(std::span<const corpus::Report> preds, std::span<const corpus::Report> gold,
                const metrics::NgramStats& stats, std::span<const std::string> terms, const TrainConfig& config) {
  std::vector<corpus::Sentence> p, g;
  p.reserve(preds.size());
  g.reserve(gold.size());
  for (const auto& r : preds) p.push_back(corpus::flatten(r));
  for (const auto& r : gold) g.push_back(corpus::flatten(r));
  MetricSet m;
  m.cider = metrics::cider(p, g, stats, config.cider_options());
  for (std::size_t n = 1; n <= 4; ++n) m.bleu[n - 1] = metrics::bleu(p, g, n);
  m.rouge_l = metrics::rouge_l(p, g);
  if (!terms.empty()) {
    const auto td = metrics::term_detection(preds, gold, terms);
    m.precision = td.precision;
    m.precision_defined = td.precision_defined;
    m.afp = td.afp;
  }
  return m;
}

}  // namespace

metrics::NgramStats report_stats(std::span<const corpus::ReportSample> samples) {
  std::vector<corpus::Sentence> docs;
  docs.reserve(samples.size());
  for (const auto& s : samples) docs.push_back(corpus::flatten(s.report));
  return metrics::NgramStats::build(docs);
}

EvalResult score_predictions(std::span<const corpus::ReportSample> samples, std::vector<SampleOutput> outputs,
                             const metrics::NgramStats& idf_stats, std::span<const std::string> terms,
                             const TrainConfig& config) {
  if (outputs.size() != samples.size()) throw ContractError("score_predictions: one output per sample required");
  if (samples.empty()) throw DataError("cannot evaluate an empty split");
  EvalResult r;
  r.n_samples = samples.size();
  std::vector<corpus::Report> raw, post, gold;
  std::size_t retrieved = 0, total = 0, gold_total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& o = outputs[i];
    o.postprocessed =
        config.postprocess.enabled ? postprocess_report(o.report, config.postprocess.keyword_map) : o.report;
    raw.push_back(o.report);
    post.push_back(o.postprocessed);
    gold.push_back(samples[i].report);
    total += o.report.size();
    gold_total += samples[i].report.size();
    for (const auto a : o.actions) retrieved += a != 0 ? 1 : 0;
  }
  r.metrics_raw = score(raw, gold, idf_stats, terms, config);
  r.metrics = config.postprocess.enabled ? score(post, gold, idf_stats, terms, config) : r.metrics_raw;
  r.action_mix_defined = total > 0;
  if (total > 0) {
    r.retrieval_fraction = static_cast<double>(retrieved) / static_cast<double>(total);
    r.generation_fraction = 1.0 - r.retrieval_fraction;
  }
  r.mean_sentences = static_cast<double>(total) / static_cast<double>(samples.size());
  r.gold_mean_sentences = static_cast<double>(gold_total) / static_cast<double>(samples.size());
  r.outputs = std::move(outputs);
  return r;
}

EvalResult evaluate_split(std::span<const corpus::ReportSample> samples, const model::ModelParameters& params,
                          const corpus::TemplateDatabase& templates, const corpus::Vocabulary& vocab,
                          const metrics::NgramStats& idf_stats, std::span<const std::string> terms,
                          const TrainConfig& config, model::Ablation ablation) {
  std::vector<SampleOutput> outputs;
  outputs.reserve(samples.size());
  for (const auto& s : samples) {
    auto roll = model::greedy_report(params, s, templates, vocab, config.limits, ablation);
    SampleOutput o;
    o.id = s.id;
    o.report = std::move(roll.report);
    for (const auto& st : roll.trace.sentences) o.actions.push_back(st.action);
    outputs.push_back(std::move(o));
  }
  return score_predictions(samples, std::move(outputs), idf_stats, terms, config);
}

}  // namespace hrgr::training
