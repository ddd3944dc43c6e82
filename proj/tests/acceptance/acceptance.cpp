// Runs every acceptance criterion and prints one PASS/FAIL line per criterion,
// followed by indented detail lines. Exit status is nonzero if any fails.
//
//   acceptance            all criteria
//   acceptance 1 2 7      a subset (4 also trains the models 5, 6, 7 and 9 use)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "hrgr/cli/commands.hpp"
#include "hrgr/corpus/dataset_io.hpp"
#include "hrgr/corpus/synth.hpp"
#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/metrics/ngram.hpp"
#include "hrgr/metrics/rewards.hpp"
#include "hrgr/training/evaluate.hpp"
#include "hrgr/training/postprocess.hpp"
#include "support/tiny_world.hpp"

using namespace hrgr;
namespace fs = std::filesystem;
using corpus::tokenize;
using metrics::Sentence;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;
  void detail(const std::string& s) { details.push_back(s); }
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      details.push_back("violated: " + what);
    }
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

// sample standard deviation (n - 1)
double stdev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

bool all_zero(const num::Array& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return v == 0.0; });
}

// ---------------------------------------------------------------- 1

Outcome gradient_check() {
  Outcome o;
  auto w = testing::tiny_world(5, 8);
  o.detail("hidden " + std::to_string(w.dims.hidden) + ", vocab " + std::to_string(w.vocab.size()) + ", templates " +
           std::to_string(w.templates.size()) + ", regions " + std::to_string(w.dims.regions));
  o.require(w.vocab.size() == 20 && w.templates.size() == 3 && w.dims.regions == 4, "tiny model dims");
  std::optional<model::ModelParameters> holder;
  const model::DecodeLimits limits;
  double worst = 0;
  std::size_t checked = 0;
  for (const auto& doc : w.docs) {
    const auto fn = testing::xe_loss_builder(w.dims, doc, w.templates, w.vocab, limits, holder);
    const auto report = num::grad_check(fn, w.params.tensors(), 1e-5, 1e-4);
    o.require(report.error.empty(), "loss evaluation: " + report.error);
    for (const auto& p : report.params) {
      worst = std::max(worst, p.max_rel_error);
      if (!(p.max_rel_error < 1e-4)) o.require(false, doc.id + " " + p.name + fmt(" rel %.3g", p.max_rel_error));
    }
    checked = report.params.size();
  }
  o.detail(std::to_string(checked) + " tensors x " + std::to_string(w.docs.size()) +
           " documents, worst relative error " + fmt("%.3g", worst) + " (tolerance 1e-4, h = 1e-5)");
  return o;
}

// ---------------------------------------------------------------- 2

std::vector<Sentence> toks(std::initializer_list<const char*> texts) {
  std::vector<Sentence> out;
  for (const char* t : texts) out.push_back(tokenize(t));
  return out;
}

Sentence random_sentence(num::Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "."};
  Sentence s;
  const std::size_t len = 1 + rng.uniform_index(max_len);
  for (std::size_t i = 0; i < len; ++i) s.push_back(words[rng.uniform_index(words.size())]);
  return s;
}

Outcome metric_oracles() {
  Outcome o;
  // micro-corpus {"a b", "a c", "d"}: idf(a) = ln 1.5, idf of everything else ln 3
  const auto refs = toks({"a b", "a c", "d"});
  const auto stats = metrics::NgramStats::build(refs);
  const double l15 = std::log(1.5), l3 = std::log(3.0);
  const double partial = 2.5 * l15 / std::sqrt(l15 * l15 + l3 * l3);
  const auto cands = toks({"a b", "a", "d"});
  struct Hand {
    const char* what;
    double got, want;
  };
  const std::vector<Hand> hand{
      {"CIDEr(a b | a b)", metrics::cider_document(refs[0], refs[0], stats), 5.0},
      {"CIDEr(a | a b)", metrics::cider_document(cands[1], refs[0], stats), partial},
      {"CIDEr(b a | a b)", metrics::cider_document(tokenize("b a"), refs[0], stats), 2.5},
      {"CIDEr(d | d)", metrics::cider_document(refs[2], refs[2], stats), 2.5},
      {"corpus CIDEr", metrics::cider(cands, refs, stats), (5.0 + partial + 2.5) / 3.0},
      {"BLEU-1(a a a | a)", metrics::bleu(toks({"a a a"}), toks({"a"}), 1), 1.0 / 3.0},
      {"BLEU-1 brevity", metrics::bleu(toks({"a b"}), toks({"a b c d"}), 1), std::exp(-1.0)},
      {"BLEU-2", metrics::bleu(toks({"a b x b"}), toks({"a b c b"}), 2), std::sqrt(0.75 / 3.0)},
      {"ROUGE-L", metrics::rouge_l(toks({"a b c d"}), toks({"a c d"})), 2.44 * 0.75 / (1.0 + 1.44 * 0.75)},
  };
  double worst = 0;
  for (const auto& h : hand) {
    const double err = std::abs(h.got - h.want);
    worst = std::max(worst, err);
    o.require(err < 1e-9, std::string(h.what) + fmt(" off by %.3g", err));
  }
  o.detail(std::to_string(hand.size()) + " hand-computed values, worst error " + fmt("%.3g", worst));

  const auto same = toks({"the heart is normal .", "no effusion .", "mild left nodule ."});
  o.require(metrics::bleu(same, same, 1) == 1.0, "BLEU-1 of identical corpora is exactly 1");

  num::Rng rng(99);
  std::vector<Sentence> corpus_refs;
  for (int i = 0; i < 30; ++i) corpus_refs.push_back(random_sentence(rng, 20));
  const auto rstats = metrics::NgramStats::build(corpus_refs);
  double tele = 0;
  for (int ep = 0; ep < 100; ++ep) {
    std::vector<Sentence> gt_report, report;
    for (std::size_t i = 0, n = 1 + rng.uniform_index(6); i < n; ++i) gt_report.push_back(random_sentence(rng, 8));
    for (std::size_t i = 0, n = 1 + rng.uniform_index(7); i < n; ++i) report.push_back(random_sentence(rng, 8));
    const Sentence gt = corpus::flatten(gt_report);
    const auto rs = metrics::sentence_rewards(report, metrics::CiderReference(gt, rstats));
    const double sum = std::accumulate(rs.begin(), rs.end(), 0.0);
    tele = std::max(tele, std::abs(sum - metrics::cider_document(corpus::flatten(report), gt, rstats)));
  }
  o.require(tele < 1e-12, "telescoping within 1e-12");
  o.detail("telescoping over 100 random episodes, worst |sum R_sent - CIDEr| " + fmt("%.3g", tele));
  return o;
}

// ---------------------------------------------------------------- 3

Outcome bandit() {
  Outcome o;
  training::BanditConfig bc;
  std::string line = "P(action 0) after 2000 steps:";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p0 = training::run_bandit(bc, seed);
    const auto hit = std::find_if(p0.begin(), p0.end(), [](double p) { return p > 0.9; });
    line += fmt(" %.4f", p0.back());
    if (hit != p0.end()) line += " (>0.9 at step " + std::to_string(hit - p0.begin() + 1) + ")";
    o.require(p0.size() == 2000 && p0.back() > 0.9, "seed " + std::to_string(seed));
  }
  o.detail(line);
  return o;
}

// ---------------------------------------------------------------- 4-7, 9

struct Corpus {
  std::vector<corpus::ReportSample> train, val, test;
  corpus::TemplateDatabase templates;
  corpus::TemplateDatabase no_templates;
  corpus::Vocabulary vocab;
  metrics::NgramStats stats;
  std::vector<std::string> terms;
  double template_fraction = 0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  model::ModelParameters hrg, hrgr, gen_only;
  double hrg_val = 0, hrgr_val = 0, gen_val = 0;
  int hrg_epoch = 0, hrgr_epoch = 0, gen_epoch = 0;
};

struct Shared {
  cli::RunConfig config;
  Corpus data;
  std::vector<SeedRun> runs;
};

Corpus build_corpus(const cli::RunConfig& c) {
  Corpus d;
  num::Rng rng(num::derive_seed(*c.seed, {0x67656e}));
  const auto all = corpus::synth_generate(c.corpus, rng);
  const auto sizes = cli::split_sizes(all.size(), c.split);
  d.train.assign(all.begin(), all.begin() + long(sizes.train));
  d.val.assign(all.begin() + long(sizes.train), all.begin() + long(sizes.train + sizes.val));
  d.test.assign(all.begin() + long(sizes.train + sizes.val), all.end());
  d.template_fraction = corpus::template_sentence_fraction(all);
  const auto threshold = static_cast<std::size_t>(std::ceil(c.templates.df_fraction * double(d.train.size())));
  d.templates = corpus::group_templates(corpus::mine_templates(d.train, threshold), threshold, c.templates.rule,
                                        d.train.size());
  d.no_templates = corpus::TemplateDatabase({}, threshold, c.templates.rule, d.train.size());
  d.vocab = corpus::Vocabulary::build(d.train, c.vocab_min_freq);
  d.stats = training::report_stats(d.train);
  d.terms = corpus::abnormal_term_list(c.corpus.n_abnormal_findings);
  return d;
}

model::ModelDims dims_for(const cli::RunConfig& c, const Corpus& d, const corpus::TemplateDatabase& db) {
  model::ModelDims m;
  m.hidden = c.model.hidden;
  m.embed = c.model.embed;
  m.attention = c.model.attention;
  m.sentence_layers = c.model.sentence_layers;
  m.regions = d.train.front().features.rows();
  m.feature_dim = d.train.front().features.cols();
  m.vocab_size = d.vocab.size();
  m.n_templates = db.size();
  return m;
}

training::TrainContext context(const Corpus& d, const corpus::TemplateDatabase& db, model::Ablation ablation) {
  training::TrainContext ctx;
  ctx.train = d.train;
  ctx.val = d.val;
  ctx.templates = &db;
  ctx.vocab = &d.vocab;
  ctx.report_stats = &d.stats;
  ctx.terms = d.terms;
  ctx.ablation = ablation;
  return ctx;
}

SeedRun train_seed(const Shared& s, std::uint64_t seed) {
  SeedRun r;
  r.seed = seed;
  const auto& d = s.data;
  const auto& cfg = s.config.train;
  {
    const auto ctx = context(d, d.templates, model::Ablation::None);
    num::Rng init(num::derive_seed(seed, {0x696e6974}));
    auto params = model::ModelParameters::init(dims_for(s.config, d, d.templates), init);
    auto xe = training::train_xe(params, ctx, cfg, seed);
    r.hrg = xe.best;
    r.hrg_val = xe.best_val_cider;
    r.hrg_epoch = xe.best_epoch;
    params = xe.best;
    auto rl = training::train_rl(params, ctx, cfg, seed);
    r.hrgr = rl.best;
    r.hrgr_val = rl.best_val_cider;
    r.hrgr_epoch = rl.best_epoch;
  }
  {
    const auto ctx = context(d, d.no_templates, model::Ablation::GenerationOnly);
    num::Rng init(num::derive_seed(seed, {0x696e6974}));
    auto params = model::ModelParameters::init(dims_for(s.config, d, d.no_templates), init);
    auto xe = training::train_xe(params, ctx, cfg, seed);
    r.gen_only = xe.best;
    r.gen_val = xe.best_val_cider;
    r.gen_epoch = xe.best_epoch;
  }
  return r;
}

training::EvalResult eval(const Shared& s, const std::vector<corpus::ReportSample>& split,
                          const model::ModelParameters& p, model::Ablation ablation) {
  const auto& d = s.data;
  const auto& db = ablation == model::Ablation::GenerationOnly ? d.no_templates : d.templates;
  return training::evaluate_split(split, p, db, d.vocab, d.stats, d.terms, s.config.train, ablation);
}

// Deterministic predictor that knows which sentences the gold report holds:
// each template sentence becomes its group's canonical variant, each abnormal
// sentence the most frequent training sentence with the same term. Severity,
// location and evidence are drawn independently of the image features, so no
// model can beat this by more than luck; it marks where the curves saturate.
double reference_cider(const Shared& s, const std::vector<corpus::ReportSample>& split) {
  const auto& d = s.data;
  auto term_of = [&](const corpus::Sentence& x) -> std::string {
    for (const auto& t : d.terms) {
      if (std::find(x.begin(), x.end(), t) != x.end()) return t;
    }
    return "";
  };
  std::map<std::string, std::map<corpus::Sentence, int>> freq;
  for (const auto& smp : d.train) {
    for (const auto& x : smp.report) {
      if (const auto t = term_of(x); !t.empty()) ++freq[t][x];
    }
  }
  std::map<std::string, corpus::Sentence> most;
  for (const auto& [t, m] : freq) {
    most[t] = std::max_element(m.begin(), m.end(), [](const auto& a, const auto& b) {
                return a.second < b.second;
              })->first;
  }
  std::vector<training::SampleOutput> outs;
  for (const auto& smp : split) {
    training::SampleOutput o;
    o.id = smp.id;
    for (const auto& x : smp.report) {
      const auto t = term_of(x);
      const std::size_t g = d.templates.match(x);
      if (!t.empty() && most.count(t)) {
        o.report.push_back(most.at(t));
        o.actions.push_back(0);
      } else if (g != 0) {
        o.report.push_back(d.templates.group(g).canonical_sentence());
        o.actions.push_back(g);
      } else {
        o.report.push_back(x);
        o.actions.push_back(0);
      }
    }
    outs.push_back(std::move(o));
  }
  return training::score_predictions(split, std::move(outs), d.stats, d.terms, s.config.train).metrics.cider;
}

Outcome direction_of_effect(Shared& s) {
  Outcome o;
  const auto& d = s.data;
  o.detail(std::to_string(d.train.size()) + "/" + std::to_string(d.val.size()) + "/" +
           std::to_string(d.test.size()) + " samples, " + std::to_string(d.templates.size()) +
           " template groups, vocabulary " + std::to_string(d.vocab.size()) + ", hidden " +
           std::to_string(s.config.model.hidden) + ", " + std::to_string(s.config.train.xe_epochs) + " XE + " +
           std::to_string(s.config.train.rl_epochs) + " RL epochs");
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto t0 = Clock::now();
    s.runs.push_back(train_seed(s, seed));
    const auto& r = s.runs.back();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    o.detail("seed " + std::to_string(seed) + ": val CIDEr HRG " + fmt("%.4f", r.hrg_val) + " (epoch " +
             std::to_string(r.hrg_epoch) + "), HRGR " + fmt("%.4f", r.hrgr_val) + " (RL epoch " +
             std::to_string(r.hrgr_epoch) + "), generation-only " + fmt("%.4f", r.gen_val) + " (epoch " +
             std::to_string(r.gen_epoch) + ")" + fmt(", %.0f s", secs));
  }
  std::vector<double> hrg, hrgr, gen;
  for (const auto& r : s.runs) {
    hrg.push_back(r.hrg_val);
    hrgr.push_back(r.hrgr_val);
    gen.push_back(r.gen_val);
  }
  const double sd_a = std::max(stdev(hrgr), stdev(hrg));
  const double sd_b = std::max(stdev(hrgr), stdev(gen));
  o.detail("val mean (std): HRGR " + fmt("%.4f", mean(hrgr)) + fmt(" (%.4f)", stdev(hrgr)) + ", HRG " +
           fmt("%.4f", mean(hrg)) + fmt(" (%.4f)", stdev(hrg)) + ", generation-only " + fmt("%.4f", mean(gen)) +
           fmt(" (%.4f)", stdev(gen)));
  o.detail("HRGR - HRG = " + fmt("%.4f", mean(hrgr) - mean(hrg)) + fmt(" vs std %.4f", sd_a) +
           "; HRGR - generation-only = " + fmt("%.4f", mean(hrgr) - mean(gen)) + fmt(" vs std %.4f", sd_b));
  o.require(mean(hrgr) >= mean(hrg) && mean(hrgr) - mean(hrg) > sd_a, "HRGR >= HRG by more than one std");
  o.require(mean(hrgr) - mean(gen) > sd_b, "HRGR > generation-only by more than one std");

  // test split, for reference only; selection above used val
  std::vector<double> t_hrg, t_hrgr, t_gen;
  for (const auto& r : s.runs) {
    t_hrg.push_back(eval(s, d.test, r.hrg, model::Ablation::None).metrics.cider);
    t_hrgr.push_back(eval(s, d.test, r.hrgr, model::Ablation::None).metrics.cider);
    t_gen.push_back(eval(s, d.test, r.gen_only, model::Ablation::GenerationOnly).metrics.cider);
  }
  o.detail("test mean (std), not used for the verdict: HRGR " + fmt("%.4f", mean(t_hrgr)) +
           fmt(" (%.4f)", stdev(t_hrgr)) + ", HRG " + fmt("%.4f", mean(t_hrg)) + fmt(" (%.4f)", stdev(t_hrg)) +
           ", generation-only " + fmt("%.4f", mean(t_gen)) + fmt(" (%.4f)", stdev(t_gen)));
  o.detail("reference predictor with gold sentence labels: val " + fmt("%.4f", reference_cider(s, d.val)) +
           ", test " + fmt("%.4f", reference_cider(s, d.test)));
  return o;
}

Outcome action_mix(const Shared& s) {
  Outcome o;
  o.detail("corpus template sentence fraction " + fmt("%.3f", s.data.template_fraction));
  for (const auto& r : s.runs) {
    const auto ev = eval(s, s.data.test, r.hrgr, model::Ablation::None);
    std::size_t retrieved = 0, generated = 0;
    for (const auto& out : ev.outputs) {
      for (auto a : out.actions) (a == 0 ? generated : retrieved)++;
    }
    o.detail("seed " + std::to_string(r.seed) + ": retrieval " + fmt("%.3f", ev.retrieval_fraction) +
             ", generation " + fmt("%.3f", ev.generation_fraction) + " (" + std::to_string(retrieved) + " / " +
             std::to_string(generated) + " sentences on test)");
    o.require(ev.retrieval_fraction >= 0.6 && ev.retrieval_fraction <= 0.95,
              "seed " + std::to_string(r.seed) + " retrieval fraction in [0.6, 0.95]");
    o.require(retrieved > 0 && generated > 0, "seed " + std::to_string(r.seed) + " both action types occur");
    o.detail("        mean sentences " + fmt("%.2f", ev.mean_sentences) + " vs gold " +
             fmt("%.2f", ev.gold_mean_sentences) +
             (std::abs(ev.mean_sentences - ev.gold_mean_sentences) <= 2.0 ? " (within 2)" : " (NOT within 2)"));
  }
  return o;
}

Outcome term_detection(const Shared& s) {
  Outcome o;
  for (const auto& r : s.runs) {
    const auto hyb = eval(s, s.data.test, r.hrgr, model::Ablation::None).metrics;
    const auto ret = eval(s, s.data.test, r.hrgr, model::Ablation::RetrievalOnly).metrics;
    auto show = [](const training::MetricSet& m) {
      return (m.precision_defined ? fmt("%.4f", m.precision) : std::string("undefined")) + fmt(" (AFP %.3f)", m.afp);
    };
    o.detail("seed " + std::to_string(r.seed) + ": precision hybrid " + show(hyb) + ", retrieval-only " + show(ret));
    // a model that never names a term has no precision to beat
    const double ret_p = ret.precision_defined ? ret.precision : 0.0;
    o.require(hyb.precision_defined && hyb.precision >= ret_p,
              "seed " + std::to_string(r.seed) + " hybrid precision >= retrieval-only");
  }
  return o;
}

Outcome gating(const Shared& s) {
  Outcome o;
  const auto& d = s.data;
  const auto ctx = context(d, d.templates, model::Ablation::None);
  const auto& params = s.runs.front().hrgr;
  auto gen_grads_zero = [](const training::RlBatch& b) {
    for (const auto& [name, g] : b.grads) {
      if (model::param_group(name) == model::ParamGroup::Generation && !all_zero(g)) return false;
    }
    return true;
  };
  auto has_gen = [](const training::RlBatch& b) {
    for (const auto& r : b.rollouts) {
      for (const auto& st : r.trace.sentences) {
        if (st.action == 0) return true;
      }
    }
    return false;
  };
  // natural batches from the trained model
  std::size_t no_gen = 0, with_gen = 0, with_gen_nonzero = 0;
  for (std::size_t k = 0; k < 200; ++k) {
    const std::vector<std::size_t> idx{(3 * k) % d.train.size(), (3 * k + 1) % d.train.size()};
    const auto b = training::rl_batch(params, ctx, s.config.train, idx, {}, 77, int(k));
    if (has_gen(b)) {
      ++with_gen;
      with_gen_nonzero += gen_grads_zero(b) ? 0 : 1;
    } else {
      ++no_gen;
      o.require(gen_grads_zero(b), "batch " + std::to_string(k) + " has no action 0 but nonzero generation grads");
    }
  }
  o.detail("200 sampled batches of 2: " + std::to_string(no_gen) + " without action 0 (generation grads exactly 0), " +
           std::to_string(with_gen) + " with action 0 (" + std::to_string(with_gen_nonzero) + " nonzero)");
  o.require(no_gen > 0, "at least one natural batch without action 0");

  // forced: action 0 impossible on a full batch
  auto forced = params;
  forced.tensors().at("policy.b_u")[0] = -1e3;
  std::vector<std::size_t> idx(16);
  std::iota(idx.begin(), idx.end(), 0);
  const auto b = training::rl_batch(forced, ctx, s.config.train, idx, {}, 78, 1);
  o.require(!has_gen(b) && gen_grads_zero(b), "forced retrieval batch gives zero generation grads");
  o.detail("forced batch of 16 with action 0 masked: generation grads " +
           std::string(gen_grads_zero(b) ? "exactly 0" : "NONZERO"));
  return o;
}

Outcome structural_limits(const Shared& s) {
  Outcome o;
  const auto& d = s.data;
  const auto& limits = s.config.train.limits;
  const auto& kw = s.config.train.postprocess.keyword_map;
  std::size_t reports = 0, violations = 0, not_idempotent = 0, at_max_sentences = 0, at_max_tokens = 0;
  auto check = [&](const model::Rollout& r) {
    ++reports;
    if (r.report.size() > limits.max_sentences) ++violations;
    at_max_sentences += r.report.size() == limits.max_sentences;
    for (const auto& st : r.trace.sentences) {
      if (st.tokens.size() > limits.max_tokens || st.token_logprobs.size() > limits.max_tokens) ++violations;
      at_max_tokens += st.token_logprobs.size() == limits.max_tokens;
    }
    const auto once = training::postprocess_report(r.report, kw);
    if (training::postprocess_report(once, kw) != once) ++not_idempotent;
  };
  // 8000 sampled from the trained models, 2000 from an untrained one whose
  // reports run long
  num::Rng rng(4242);
  for (std::size_t k = 0; k < 8000; ++k) {
    const auto& p = s.runs[k % s.runs.size()].hrgr;
    num::Tape t;
    model::Network net(t, p);
    check(model::generate_report(net, d.test[k % d.test.size()], d.templates, d.vocab, model::DecodeMode::Sample, rng,
                                 limits));
  }
  num::Rng init(9);
  auto raw = model::ModelParameters::init(dims_for(s.config, d, d.templates), init);
  auto& bz = raw.tensors().at("sent.b_z");
  for (std::size_t i = 0; i < bz.size(); ++i) bz[i] = -3.0;
  for (std::size_t k = 0; k < 2000; ++k) {
    num::Tape t;
    model::Network net(t, raw);
    check(model::generate_report(net, d.test[k % d.test.size()], d.templates, d.vocab, model::DecodeMode::Sample, rng,
                                 limits));
  }
  o.detail(std::to_string(reports) + " reports: " + std::to_string(violations) + " limit violations (" +
           std::to_string(at_max_sentences) + " at max_sentences, " + std::to_string(at_max_tokens) +
           " sentences at max_tokens), " + std::to_string(not_idempotent) + " post-processing non-idempotent");
  o.require(reports == 10000, "10^4 reports");
  o.require(violations == 0, "no structural limit violations");
  o.require(not_idempotent == 0, "post-processing idempotent");
  return o;
}

// ---------------------------------------------------------------- 8

Outcome reproducibility() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("hrgr_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  cli::RunConfig c;
  c.seed = 5;
  c.corpus.n_samples = 300;
  c.model = {16, 16, 16, 2};
  c.train.xe_epochs = 3;
  c.train.rl_epochs = 2;
  c.paths.data_dir = (root / "data").string();
  c.paths.run_dir = (root / "run").string();
  const std::vector<fs::path> files{"data/train.jsonl", "data/templates.json", "data/vocab.json",
                                    "run/xe.ckpt",      "run/model.ckpt",      "run/metrics.json",
                                    "run/outputs.jsonl"};
  auto pipeline = [&](bool force) {
    cli::CommandOptions opt;
    opt.config = c;
    opt.force = force;
    std::ostringstream log;
    cli::cmd_gen_data(opt, log);
    cli::cmd_mine_templates(opt, log);
    cli::cmd_train(opt, log);
    cli::cmd_evaluate(opt, log);
    std::map<fs::path, std::string> bytes;
    for (const auto& f : files) bytes[f] = corpus::read_file(root / f);
    return bytes;
  };
  const auto first = pipeline(false);
  const auto second = pipeline(true);
  std::size_t total = 0;
  for (const auto& f : files) {
    total += first.at(f).size();
    o.require(first.at(f) == second.at(f), f.string() + " differs between runs");
  }
  o.detail("gen-data, mine-templates, train, evaluate run twice: " + std::to_string(files.size()) + " files, " +
           std::to_string(total) + " bytes compared");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  auto want = [&](int k) { return only.empty() || only.count(k) > 0; };
  const bool need_models = want(4) || want(5) || want(6) || want(7) || want(9);

  Shared shared;
  shared.config.seed = 2024;
  shared.config.model = {32, 32, 32, 2};
  shared.config.train.val_limit = 0;

  const std::map<int, std::string> names{
      {1, "gradient check on the tiny model"},     {2, "metric oracles and telescoping"},
      {3, "REINFORCE bandit"},                     {4, "direction of effect over 3 seeds"},
      {5, "action mix"},                           {6, "term-detection precision vs retrieval-only"},
      {7, "reward gating of generation gradients"}, {8, "byte-identical rerun"},
      {9, "structural limits and post-processing idempotence"}};
  const std::map<int, std::function<Outcome()>> run{
      {1, gradient_check},
      {2, metric_oracles},
      {3, bandit},
      {4, [&] { return direction_of_effect(shared); }},
      {5, [&] { return action_mix(shared); }},
      {6, [&] { return term_detection(shared); }},
      {7, [&] { return gating(shared); }},
      {8, reproducibility},
      {9, [&] { return structural_limits(shared); }}};

  if (need_models) {
    shared.data = build_corpus(shared.config);
    if (!want(4)) direction_of_effect(shared);  // trains the models only
  }
  int failed = 0;
  for (const auto& [k, fn] : run) {
    if (!want(k)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << k << ": " << names.at(k) << fmt("  [%.1f s]", secs)
              << "\n";
    for (const auto& line : out.details) std::cout << "      " << line << "\n";
    std::cout << std::flush;
    failed += out.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
