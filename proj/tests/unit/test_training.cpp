#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"

#include "hrgr/corpus/synth.hpp"
#include "hrgr/errors.hpp"
#include "hrgr/model/checkpoint.hpp"
#include "hrgr/training/evaluate.hpp"
#include "hrgr/training/postprocess.hpp"
#include "support/tiny_world.hpp"

using namespace hrgr;
using namespace hrgr::training;
using corpus::tokenize;
using hrgr::testing::tiny_world;

namespace {

struct Fixture {
  hrgr::testing::TinyWorld w = tiny_world(21);
  metrics::NgramStats stats = report_stats(w.docs);
  TrainContext ctx;
  Fixture() {
    ctx.train = w.docs;
    ctx.val = w.docs;
    ctx.templates = &w.templates;
    ctx.vocab = &w.vocab;
    ctx.report_stats = &stats;
    ctx.terms = {"nodule"};
  }
};

bool all_zero(const num::Array& a) {
  for (double v : a.data()) {
    if (v != 0.0) return false;
  }
  return true;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("xe_loss is the sum of stop, action and token terms") {
  Fixture f;
  const auto& w = f.w;
  // template, free text, template
  const auto& sample = w.docs[0];
  REQUIRE(w.templates.match(sample.report[0]) != 0);
  REQUIRE(w.templates.match(sample.report[1]) == 0);
  model::DecodeLimits limits;

  num::Tape t;
  model::Network net(t, w.params);
  const double got = t.scalar(xe_loss(net, sample, w.templates, w.vocab, limits));

  num::Tape t2;
  model::Network n2(t2, w.params);
  const auto image = n2.encode_features(std::span(&sample.features, 1));
  auto state = n2.initial_state();
  double expected = 0.0;
  for (std::size_t i = 0; i <= sample.report.size(); ++i) {
    const auto topic = n2.decode_topic_step(image, state);
    state = topic.state;
    if (i == sample.report.size()) {
      expected -= std::log(topic.z);
      break;
    }
    expected -= std::log(1.0 - topic.z);
    const std::size_t target = w.templates.match(sample.report[i]);
    expected -= t2.value(n2.action_log_probs(topic.q))[target];
    if (target != 0) continue;
    const auto ids = w.vocab.encode(sample.report[i]);
    num::Var h = n2.initial_word_state();
    corpus::TokenId prev = corpus::Vocabulary::kBos;
    for (const auto id : ids) {
      const auto ws = n2.word_step(image, topic.q, prev, h);
      expected -= t2.value(ws.log_probs)[id];
      prev = id;
      h = ws.hidden;
    }
  }
  CHECK(std::abs(got - expected) < 1e-10);

  // at the sentence limit the stop step is never evaluated
  limits.max_sentences = sample.report.size();
  num::Tape t3;
  model::Network n3(t3, w.params);
  const double capped = t3.scalar(xe_loss(n3, sample, w.templates, w.vocab, limits));
  CHECK(capped < got);
}

TEST_CASE("one XE epoch on 10 samples runs and is finite") {
  corpus::SynthConfig sc;
  sc.n_samples = 12;
  num::Rng rng(1);
  const auto docs = corpus::synth_generate(sc, rng);
  const std::span<const corpus::ReportSample> all(docs);
  const auto db = corpus::group_templates(corpus::mine_templates(all.first(10), 3), 3, {}, 10);
  const auto vocab = corpus::Vocabulary::build(all.first(10), 1);
  const auto stats = report_stats(all.first(10));
  TrainContext ctx{all.first(10), all.subspan(10), &db, &vocab, &stats, corpus::abnormal_term_list(8)};
  model::ModelDims d;
  d.hidden = d.embed = d.attention = 16;
  d.vocab_size = vocab.size();
  d.n_templates = db.size();
  auto params = model::ModelParameters::init(d, rng);
  TrainConfig cfg;
  cfg.xe_epochs = 1;
  std::vector<EpochLog> logs;
  const auto r = train_xe(params, ctx, cfg, 5, [&](const EpochLog& l) { logs.push_back(l); });
  REQUIRE(logs.size() == 1);
  CHECK(std::isfinite(logs[0].loss));
  CHECK(logs[0].phase == "xe");
  CHECK(r.best_epoch == 1);
  CHECK(r.history.size() == 1);
  const auto j = logs[0].to_json();
  for (const char* key : {"epoch", "phase", "loss", "val_cider", "val_bleu1", "retrieval_fraction", "mean_sentences",
                          "wallclock_s"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("XE memorizes 5 samples") {
  corpus::SynthConfig sc;
  sc.n_samples = 5;
  num::Rng rng(3);
  const auto docs = corpus::synth_generate(sc, rng);
  const auto db = corpus::group_templates(corpus::mine_templates(docs, 2), 2, {}, docs.size());
  const auto vocab = corpus::Vocabulary::build(docs, 1);
  const auto stats = report_stats(docs);
  TrainContext ctx{docs, docs, &db, &vocab, &stats, corpus::abnormal_term_list(8)};
  model::ModelDims d;  // desk dims
  d.vocab_size = vocab.size();
  d.n_templates = db.size();
  auto params = model::ModelParameters::init(d, rng);
  TrainConfig cfg;
  num::Optimizer opt({num::Algorithm::Adam, cfg.lr_xe, 0.9, 0.999, 1e-8, cfg.clip_norm});
  double loss = 0.0;
  int epoch = 0;
  for (epoch = 1; epoch <= 500; ++epoch) {
    num::Rng erng(epoch);
    loss = xe_epoch(params, ctx, opt, 5, cfg.limits, erng, epoch);
    if (loss < 0.1) break;
  }
  INFO("final loss " << loss << " after " << epoch << " epochs");
  CHECK(loss < 0.1);
}

TEST_CASE("zero learning rate leaves parameters and metrics unchanged") {
  Fixture f;
  TrainConfig cfg;
  cfg.postprocess.enabled = false;
  auto params = f.w.params;
  const auto before = evaluate_split(f.w.docs, params, f.w.templates, f.w.vocab, f.stats, f.ctx.terms, cfg);
  num::Optimizer opt({num::Algorithm::Adam, 0.0, 0.9, 0.999, 1e-8, 5.0});
  for (int e = 1; e <= 3; ++e) {
    num::Rng rng(e);
    xe_epoch(params, f.ctx, opt, 2, cfg.limits, rng, e);
    CHECK(params == f.w.params);
    const auto after = evaluate_split(f.w.docs, params, f.w.templates, f.w.vocab, f.stats, f.ctx.terms, cfg);
    CHECK(after.to_json() == before.to_json());
  }
}

TEST_CASE("gamma = 0 makes each return its own sentence reward") {
  Fixture f;
  TrainConfig cfg;
  cfg.gamma = 0.0;
  const auto batch = rl_batch(f.w.params, f.ctx, cfg, iota(f.w.docs.size()), {}, 9, 1);
  std::size_t sentences = 0;
  for (const auto& r : batch.rollouts) {
    CHECK(r.trace.rewards.returns_r == r.trace.rewards.sentence_rewards);
    sentences += r.trace.sentences.size();
    for (std::size_t i = 0; i < r.trace.sentences.size(); ++i) {
      const auto& wr = r.trace.rewards.word_rewards[i];
      CHECK(r.trace.rewards.returns_g[i] == wr);
    }
  }
  CHECK(sentences > 0);
}

TEST_CASE("discounted returns follow the recurrence inside rl_batch") {
  Fixture f;
  TrainConfig cfg;
  cfg.gamma = 0.9;
  const auto batch = rl_batch(f.w.params, f.ctx, cfg, iota(f.w.docs.size()), {}, 2, 1);
  for (const auto& r : batch.rollouts) {
    const auto& rw = r.trace.rewards;
    const double sum = std::accumulate(rw.sentence_rewards.begin(), rw.sentence_rewards.end(), 0.0);
    const metrics::CiderReference ref(corpus::flatten(f.w.docs[&r - batch.rollouts.data()].report), f.stats);
    CHECK(std::abs(sum - ref.score(corpus::flatten(r.report))) < 1e-12);
    for (std::size_t i = 0; i < rw.returns_r.size(); ++i) {
      const double next = i + 1 < rw.returns_r.size() ? rw.returns_r[i + 1] : 0.0;
      CHECK(std::abs(rw.returns_r[i] - (rw.sentence_rewards[i] + 0.9 * next)) < 1e-12);
    }
  }
}

TEST_CASE("zero rewards without a baseline give zero gradient and no update") {
  Fixture f;
  // empty gold reports score every sampled report 0
  auto docs = f.w.docs;
  for (auto& d : docs) d.report.clear();
  f.ctx.train = docs;
  TrainConfig cfg;
  cfg.baseline.enabled = false;
  const auto batch = rl_batch(f.w.params, f.ctx, cfg, iota(docs.size()), {}, 4, 1);
  for (const auto& [name, g] : batch.grads) CHECK_MESSAGE(all_zero(g), name);

  auto params = f.w.params;
  num::Optimizer opt({num::Algorithm::Adam, 1e-2, 0.9, 0.999, 1e-8, 5.0});
  Baselines b;
  rl_epoch(params, f.ctx, cfg, opt, b, 4, 1);
  CHECK(params == f.w.params);
}

TEST_CASE("generation gradients are exactly zero when no sentence is generated") {
  Fixture f;
  auto params = f.w.params;
  auto& bu = params.tensors().at("policy.b_u");
  bu[0] = -200.0;  // action 0 is never sampled
  TrainConfig cfg;
  const auto batch = rl_batch(params, f.ctx, cfg, iota(f.w.docs.size()), {}, 6, 1);
  std::size_t sentences = 0;
  for (const auto& r : batch.rollouts) {
    for (const auto& s : r.trace.sentences) CHECK(s.action != 0);
    sentences += r.trace.sentences.size();
  }
  REQUIRE(sentences > 0);
  bool policy_moved = false;
  for (const auto& [name, g] : batch.grads) {
    if (model::param_group(name) == model::ParamGroup::Generation) CHECK_MESSAGE(all_zero(g), name);
    if (model::param_group(name) == model::ParamGroup::RetrievalPolicy) policy_moved |= !all_zero(g);
  }
  CHECK(policy_moved);

  // and they are not zero once generation happens
  auto gen = f.w.params;
  gen.tensors().at("policy.b_u")[0] = 200.0;
  const auto gb = rl_batch(gen, f.ctx, cfg, iota(f.w.docs.size()), {}, 6, 1);
  CHECK_FALSE(all_zero(gb.grads.at("gen.W_y")));
}

TEST_CASE("RL update groups") {
  TrainConfig cfg;
  CHECK(rl_updates("policy.W_u", cfg));
  CHECK(rl_updates("gen.gru.W_xr", cfg));
  CHECK(rl_updates("sent.W_z", cfg));
  CHECK(rl_updates("sent.b_z", cfg));
  CHECK_FALSE(rl_updates("sent.W_q", cfg));
  CHECK_FALSE(rl_updates("enc.W", cfg));
  cfg.rl_update_stop = false;
  CHECK_FALSE(rl_updates("sent.b_z", cfg));
  cfg.rl_update_trunk = true;
  CHECK(rl_updates("enc.W", cfg));
  CHECK(rl_updates("sent.gru0.W_xr", cfg));
}

TEST_CASE("an RL epoch leaves the frozen trunk untouched and is reproducible") {
  Fixture f;
  TrainConfig cfg;
  cfg.batch_size = 2;
  auto run = [&] {
    auto params = f.w.params;
    num::Optimizer opt({num::Algorithm::Adam, 1e-2, 0.9, 0.999, 1e-8, 5.0});
    Baselines b;
    rl_epoch(params, f.ctx, cfg, opt, b, 17, 1);
    CHECK(b.have_r);
    return params;
  };
  const auto a = run();
  const auto b = run();
  CHECK(a == b);
  bool moved = false;
  for (const auto& [name, arr] : a.tensors()) {
    if (!rl_updates(name, cfg)) CHECK_MESSAGE(arr == f.w.params.at(name), name);
    else moved |= !(arr == f.w.params.at(name));
  }
  CHECK(moved);
}

TEST_CASE("bandit reaches P(action 0) > 0.9 within 2000 steps") {
  for (bool baseline : {true, false}) {
    BanditConfig bc;
    bc.baseline = baseline;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto p0 = run_bandit(bc, seed);
      REQUIRE(p0.size() == 2000);
      INFO("seed " << seed << " baseline " << baseline);
      CHECK(p0.back() > 0.9);
    }
  }
}

TEST_CASE("a baseline does not change the expected bandit gradient") {
  const std::vector<double> logits{0.2, -0.1, 0.3};
  const std::vector<double> rewards{1.0, 0.0, 0.0};
  double z = 0;
  std::vector<double> p(3);
  for (std::size_t i = 0; i < 3; ++i) z += std::exp(logits[i]);
  double mean_r = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    p[i] = std::exp(logits[i]) / z;
    mean_r += p[i] * rewards[i];
  }
  const int n = 1000;
  for (double b : {0.0, 0.5, 2.0}) {
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    for (int seed = 0; seed < n; ++seed) {
      num::Rng rng(static_cast<std::uint64_t>(seed) + 1000);
      const auto g = bandit_gradient(logits, rewards, b, rng);
      for (std::size_t j = 0; j < 3; ++j) {
        sum[j] += g[j];
        sq[j] += g[j] * g[j];
      }
    }
    for (std::size_t j = 0; j < 3; ++j) {
      const double mean = sum[j] / n;
      const double se = std::sqrt((sq[j] / n - mean * mean) / n);
      const double exact = -p[j] * (rewards[j] - mean_r);  // gradient of the loss, -dE[r]/dl_j
      INFO("baseline " << b << " logit " << j << " mean " << mean << " exact " << exact << " se " << se);
      CHECK(std::abs(mean - exact) < 4 * se);
      CHECK((mean < 0) == (exact < 0));
    }
  }
}

TEST_CASE("post-processing appends missing keyword sentences in order") {
  const KeywordMap map{{"heart size", "the heart size is normal ."},
                       {"pleural spaces", "the pleural spaces are clear ."},
                       {"lungs", "the lungs are clear ."},
                       {"mediastinal contours", "the mediastinal contours are normal ."}};
  const auto empty = postprocess_report({}, map);
  REQUIRE(empty.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(empty[i] == tokenize(map[i].second));

  const corpus::Report full{tokenize("heart size is normal ."), tokenize("pleural spaces are clear ."),
                            tokenize("there is mild lungs nodule ."), tokenize("normal mediastinal contours .")};
  CHECK(postprocess_report(full, map) == full);

  const corpus::Report partial{tokenize("there is mild lungs nodule .")};
  const auto once = postprocess_report(partial, map);
  CHECK(once.size() == 4);
  CHECK(once[0] == partial[0]);
  CHECK(once[1] == tokenize(map[0].second));
  CHECK(postprocess_report(once, map) == once);

  CHECK_FALSE(sentence_mentions(tokenize("the heart is normal in size"), tokenize("heart size")));
  CHECK_THROWS_AS(postprocess_report({}, KeywordMap{{"effusion", "the lungs are clear ."}}), ContractError);
}

TEST_CASE("evaluating the gold reports gives perfect scores") {
  corpus::SynthConfig sc;
  sc.n_samples = 200;
  num::Rng rng(8);
  const auto docs = corpus::synth_generate(sc, rng);
  const auto db = corpus::group_templates(corpus::mine_templates(docs, 4), 4, {}, docs.size());
  const auto stats = report_stats(docs);
  std::vector<SampleOutput> outs;
  for (const auto& d : docs) {
    SampleOutput o;
    o.id = d.id;
    o.report = d.report;
    for (const auto& s : d.report) o.actions.push_back(db.match(s));
    outs.push_back(o);
  }
  TrainConfig cfg;
  cfg.postprocess.enabled = false;
  const auto terms = corpus::abnormal_term_list(sc.n_abnormal_findings);
  const auto r = score_predictions(docs, outs, stats, terms, cfg);
  CHECK(r.metrics.bleu[0] == 1.0);
  CHECK(r.metrics.rouge_l == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.metrics.precision_defined);
  CHECK(r.metrics.precision == 1.0);
  CHECK(r.metrics.afp == 0.0);
  CHECK(r.action_mix_defined);
  CHECK(r.retrieval_fraction + r.generation_fraction == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.retrieval_fraction > 0.6);
  CHECK(r.mean_sentences == r.gold_mean_sentences);
  CHECK(r.to_json().contains("metrics_raw"));
}

TEST_CASE("greedy evaluation reports a consistent action mix") {
  Fixture f;
  TrainConfig cfg;
  const auto r = evaluate_split(f.w.docs, f.w.params, f.w.templates, f.w.vocab, f.stats, f.ctx.terms, cfg);
  REQUIRE(r.outputs.size() == f.w.docs.size());
  if (r.action_mix_defined) CHECK(r.retrieval_fraction + r.generation_fraction == doctest::Approx(1.0));
  for (const auto& o : r.outputs) {
    CHECK(o.actions.size() == o.report.size());
    CHECK(postprocess_report(o.postprocessed, cfg.postprocess.keyword_map) == o.postprocessed);
  }
  const auto ro = evaluate_split(f.w.docs, f.w.params, f.w.templates, f.w.vocab, f.stats, f.ctx.terms, cfg,
                                 model::Ablation::RetrievalOnly);
  CHECK(ro.generation_fraction == 0.0);
}

TEST_CASE("a checkpoint round-trip reproduces evaluation metrics bitwise") {
  Fixture f;
  TrainConfig cfg;
  auto params = f.w.params;
  num::Optimizer opt({num::Algorithm::Adam, 1e-2, 0.9, 0.999, 1e-8, 5.0});
  num::Rng rng(3);
  xe_epoch(params, f.ctx, opt, 2, cfg.limits, rng, 1);
  const auto path = std::filesystem::temp_directory_path() / "hrgr_training_roundtrip.ckpt";
  model::save_checkpoint(path, params, {1, 3, "x"});
  const auto loaded = model::load_checkpoint(path, params.dims());
  std::filesystem::remove(path);
  const auto a = evaluate_split(f.w.docs, params, f.w.templates, f.w.vocab, f.stats, f.ctx.terms, cfg);
  const auto b = evaluate_split(f.w.docs, loaded.params, f.w.templates, f.w.vocab, f.stats, f.ctx.terms, cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.metrics.cider == b.metrics.cider);
}

TEST_CASE("train config json round-trip and validation") {
  TrainConfig c;
  c.gamma = 0.5;
  c.limits.stop_threshold = 0.4;
  c.postprocess.keyword_map = {{"lungs", "the lungs are clear ."}};
  nlohmann::json j = c;
  TrainConfig back = j.get<TrainConfig>();
  CHECK(back == c);

  j["bogus"] = 1;
  CHECK_THROWS_AS(j.get<TrainConfig>(), ConfigError);
  nlohmann::json g = c;
  g["gamma"] = 1.5;
  CHECK_THROWS_AS(g.get<TrainConfig>(), ConfigError);
  g = c;
  g["lr_rl"] = "fast";
  CHECK_THROWS_AS(g.get<TrainConfig>(), ConfigError);
}
