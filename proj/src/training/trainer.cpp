#include "hrgr/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/errors.hpp"
#include "hrgr/metrics/rewards.hpp"
#include "hrgr/training/evaluate.hpp"

namespace hrgr::training {

using num::Var;
using nlohmann::json;

json EpochLog::to_json() const {
  json j{{"epoch", epoch},
         {"phase", phase},
         {"loss", loss},
         {"val_cider", val_cider},
         {"val_bleu1", val_bleu1},
         {"retrieval_fraction", retrieval_fraction},
         {"mean_sentences", mean_sentences},
         {"wallclock_s", wallclock_s}};
  if (phase == "rl") j["mean_reward"] = mean_reward;
  return j;
}

namespace {

Var sum_terms(num::Tape& t, const std::vector<Var>& terms) {
  Var acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = t.add(acc, terms[i]);
  return acc;
}

void accumulate(num::Gradients& into, num::Gradients&& g) {
  if (into.empty()) {
    into = std::move(g);
    return;
  }
  for (auto& [name, a] : g) {
    auto& dst = into.at(name);
    auto s = a.data();
    auto d = dst.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  }
}

void scale_grads(num::Gradients& g, double f) {
  for (auto& [name, a] : g) {
    for (double& v : a.data()) v *= f;
  }
}

num::Gradients zero_grads(const model::ModelParameters& params) {
  num::Gradients g;
  for (const auto& [name, a] : params.tensors()) g.emplace(name, num::Array(a.shape()));
  return g;
}

std::vector<std::size_t> shuffled(std::size_t n, num::Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  return order;
}

void check_context(const TrainContext& ctx) {
  if (!ctx.templates || !ctx.vocab || !ctx.report_stats) {
    throw ContractError("TrainContext is missing templates, vocabulary or idf statistics");
  }
  if (ctx.train.empty()) throw DataError("training split is empty");
}

EvalResult validate(const model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config) {
  auto val = ctx.val;
  if (config.val_limit > 0 && val.size() > static_cast<std::size_t>(config.val_limit)) {
    val = val.first(static_cast<std::size_t>(config.val_limit));
  }
  if (val.empty()) throw DataError("validation split is empty");
  return evaluate_split(val, params, *ctx.templates, *ctx.vocab, *ctx.report_stats, ctx.terms, config, ctx.ablation);
}

num::OptimizerConfig optimizer_config(const TrainConfig& c, double lr) {
  num::OptimizerConfig o;
  o.algorithm = c.optimizer;
  o.lr = lr;
  o.clip_norm = c.clip_norm;
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void record_epoch(PhaseResult& result, EpochLog log, const EvalResult& ev, const model::ModelParameters& params,
                  const EpochCallback& on_epoch) {
  log.val_cider = ev.metrics.cider;
  log.val_bleu1 = ev.metrics.bleu[0];
  log.retrieval_fraction = ev.retrieval_fraction;
  log.mean_sentences = ev.mean_sentences;
  if (result.history.empty() || log.val_cider > result.best_val_cider) {
    result.best = params;
    result.best_epoch = log.epoch;
    result.best_val_cider = log.val_cider;
  }
  result.history.push_back(log);
  if (on_epoch) on_epoch(log);
}

}  // namespace

Var xe_loss(model::Network& net, const corpus::ReportSample& sample, const corpus::TemplateDatabase& templates,
            const corpus::Vocabulary& vocab, const model::DecodeLimits& limits) {
  auto& t = net.tape();
  const auto image = net.encode_features(std::span(&sample.features, 1));
  auto state = net.initial_state();
  const std::size_t m = std::min(sample.report.size(), limits.max_sentences);
  std::vector<Var> terms;
  for (std::size_t i = 0; i <= m && i < limits.max_sentences; ++i) {
    const auto topic = net.decode_topic_step(image, state);
    state = topic.state;
    if (i == m) {
      terms.push_back(t.log_sigmoid(topic.stop_logit));
      break;
    }
    terms.push_back(t.log_sigmoid(t.scale(topic.stop_logit, -1.0)));
    const auto& sentence = sample.report[i];
    const std::size_t target = templates.match(sentence);
    if (net.dims().n_actions() > 1) terms.push_back(t.pick(net.action_log_probs(topic.q), target));
    if (target == 0) {
      const auto ids = vocab.encode(sentence);
      for (const Var v : model::score_sentence(net, image, topic.q, ids)) terms.push_back(v);
    }
  }
  return t.scale(sum_terms(t, terms), -1.0);
}

double xe_epoch(model::ModelParameters& params, const TrainContext& ctx, num::Optimizer& optimizer, int batch_size,
                const model::DecodeLimits& limits, num::Rng& rng, int epoch) {
  check_context(ctx);
  const auto order = shuffled(ctx.train.size(), rng);
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    num::Gradients grads;
    for (std::size_t k = start; k < end; ++k) {
      const auto& sample = ctx.train[order[k]];
      num::Tape tape;
      model::Network net(tape, params);
      const Var loss = xe_loss(net, sample, *ctx.templates, *ctx.vocab, limits);
      const double v = tape.scalar(loss);
      if (!std::isfinite(v)) {
        throw NumericError("xe epoch " + std::to_string(epoch) + ": non-finite loss " + std::to_string(v) +
                           " on sample '" + sample.id + "' (" + std::to_string(sample.report.size()) +
                           " gold sentences, tape of " + std::to_string(tape.size()) + " nodes)");
      }
      total += v;
      accumulate(grads, tape.backward(loss));
    }
    scale_grads(grads, 1.0 / static_cast<double>(end - start));
    try {
      optimizer.step(params.tensors(), grads);
    } catch (const NumericError& e) {
      throw NumericError("xe epoch " + std::to_string(epoch) + ", batch starting at " + std::to_string(start) +
                         ": " + e.what());
    }
  }
  return total / static_cast<double>(order.size());
}

PhaseResult train_xe(model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                     std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  check_context(ctx);
  num::Optimizer opt(optimizer_config(config, config.lr_xe));
  PhaseResult result;
  const auto t0 = std::chrono::steady_clock::now();
  if (config.xe_epochs == 0) {
    EpochLog log;
    log.phase = "xe";
    record_epoch(result, log, validate(params, ctx, config), params, on_epoch);
    return result;
  }
  for (int epoch = 1; epoch <= config.xe_epochs; ++epoch) {
    num::Rng rng(num::derive_seed(seed, {1, static_cast<std::uint64_t>(epoch)}));
    EpochLog log;
    log.epoch = epoch;
    log.phase = "xe";
    log.loss = xe_epoch(params, ctx, opt, config.batch_size, config.limits, rng, epoch);
    const auto ev = validate(params, ctx, config);
    log.wallclock_s = seconds_since(t0);
    record_epoch(result, log, ev, params, on_epoch);
  }
  return result;
}

bool rl_updates(const std::string& name, const TrainConfig& config) {
  switch (model::param_group(name)) {
    case model::ParamGroup::RetrievalPolicy:
    case model::ParamGroup::Generation: return true;
    case model::ParamGroup::StopControl: return config.rl_update_stop;
    case model::ParamGroup::Encoder:
    case model::ParamGroup::SentenceDecoder: return config.rl_update_trunk;
  }
  return false;
}

RlBatch rl_batch(const model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                 std::span<const std::size_t> indices, const Baselines& baselines, std::uint64_t seed, int epoch) {
  check_context(ctx);
  RlBatch batch;
  batch.grads = zero_grads(params);
  const auto opts = config.cider_options();
  const bool use_b = config.baseline.enabled;
  const double b_r = use_b && baselines.have_r ? baselines.b_r : 0.0;
  const double b_g = use_b && baselines.have_g ? baselines.b_g : 0.0;
  for (const std::size_t k : indices) {
    const auto& sample = ctx.train[k];
    num::Tape tape;
    model::Network net(tape, params);
    num::Rng rng(num::derive_seed(seed, {2, static_cast<std::uint64_t>(epoch), k}));
    auto roll = model::generate_report(net, sample, *ctx.templates, *ctx.vocab, model::DecodeMode::Sample, rng,
                                       config.limits, ctx.ablation);
    auto& rw = roll.trace.rewards;
    rw.gamma = config.gamma;
    const metrics::CiderReference ref(corpus::flatten(sample.report), *ctx.report_stats);
    rw.sentence_rewards = metrics::sentence_rewards(roll.report, ref, opts);
    rw.returns_r = metrics::discounted_returns(rw.sentence_rewards, config.gamma);
    batch.mean_reward += std::accumulate(rw.sentence_rewards.begin(), rw.sentence_rewards.end(), 0.0);

    std::vector<Var> terms;
    for (std::size_t i = 0; i < roll.trace.sentences.size(); ++i) {
      const auto& st = roll.trace.sentences[i];
      const auto& sv = roll.vars.sentences[i];
      const double ret = rw.returns_r[i];
      batch.sentence_returns.push_back(ret);
      if (sv.logprob_action) terms.push_back(tape.scale(*sv.logprob_action, -(ret - b_r)));
      if (config.rl_update_stop) terms.push_back(tape.scale(sv.logprob_continue, -ret));
      std::vector<double> wr, wret;
      if (st.action == 0) {
        static const corpus::Sentence kEmpty;
        const auto& gt = i < sample.report.size() ? sample.report[i] : kEmpty;
        wr = metrics::word_rewards(st.tokens, metrics::CiderReference(gt, *ctx.report_stats), opts);
        wr.resize(sv.token_logprobs.size(), 0.0);  // EOS adds nothing
        wret = metrics::discounted_returns(wr, config.gamma);
        for (std::size_t t = 0; t < wret.size(); ++t) {
          batch.word_returns.push_back(wret[t]);
          terms.push_back(tape.scale(sv.token_logprobs[t], -(wret[t] - b_g)));
        }
      }
      rw.word_rewards.push_back(std::move(wr));
      rw.returns_g.push_back(std::move(wret));
    }
    if (config.entropy_bonus > 0) {
      for (const Var s : roll.vars.stop_logits) {
        const Var z = tape.sigmoid(s);
        const Var nz = tape.sigmoid(tape.scale(s, -1.0));
        const Var plogp = tape.add(tape.mul(z, tape.log_sigmoid(s)), tape.mul(nz, tape.log_sigmoid(tape.scale(s, -1.0))));
        terms.push_back(tape.scale(plogp, config.entropy_bonus));  // -beta * H
      }
    }
    if (!terms.empty()) {
      const Var loss = sum_terms(tape, terms);
      const double v = tape.scalar(loss);
      if (!std::isfinite(v)) {
        throw NumericError("rl epoch " + std::to_string(epoch) + ": non-finite loss on sample '" + sample.id + "'");
      }
      batch.loss += v;
      accumulate(batch.grads, tape.backward(loss));
    }
    batch.rollouts.push_back(std::move(roll));
  }
  const double n = static_cast<double>(indices.size());
  if (n > 0) {
    scale_grads(batch.grads, 1.0 / n);
    batch.loss /= n;
    batch.mean_reward /= n;
  }
  return batch;
}

namespace {

void update_baseline(double& b, bool& have, const std::vector<double>& xs, double decay) {
  if (xs.empty()) return;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  b = have ? decay * b + (1.0 - decay) * mean : mean;
  have = true;
}

}  // namespace

RlEpochStats rl_epoch(model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                      num::Optimizer& optimizer, Baselines& baselines, std::uint64_t seed, int epoch) {
  check_context(ctx);
  num::Rng order_rng(num::derive_seed(seed, {3, static_cast<std::uint64_t>(epoch)}));
  const auto order = shuffled(ctx.train.size(), order_rng);
  RlEpochStats stats;
  std::size_t empty = 0;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    RlBatch batch = rl_batch(params, ctx, config, idx, baselines, seed, epoch);
    for (const auto& r : batch.rollouts) empty += r.report.empty() ? 1 : 0;
    const double w = static_cast<double>(idx.size());
    stats.loss += batch.loss * w;
    stats.mean_reward += batch.mean_reward * w;
    num::Gradients g;
    for (auto& [name, a] : batch.grads) {
      if (rl_updates(name, config)) g.emplace(name, std::move(a));
    }
    try {
      optimizer.step(params.tensors(), g);
    } catch (const NumericError& e) {
      throw NumericError("rl epoch " + std::to_string(epoch) + ", batch starting at " + std::to_string(start) +
                         ": " + e.what());
    }
    if (config.baseline.enabled) {
      update_baseline(baselines.b_r, baselines.have_r, batch.sentence_returns, config.baseline.ema_decay);
      update_baseline(baselines.b_g, baselines.have_g, batch.word_returns, config.baseline.ema_decay);
    }
  }
  const double n = static_cast<double>(order.size());
  stats.loss /= n;
  stats.mean_reward /= n;
  stats.empty_fraction = static_cast<double>(empty) / n;
  stats.degenerate = empty == order.size();
  return stats;
}

PhaseResult train_rl(model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                     std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  check_context(ctx);
  num::Optimizer opt(optimizer_config(config, config.lr_rl));
  Baselines baselines;
  PhaseResult result;
  result.best = params;
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.rl_epochs; ++epoch) {
    const auto st = rl_epoch(params, ctx, config, opt, baselines, seed, epoch);
    if (st.degenerate) {
      std::cerr << "warning: every sampled report in rl epoch " << epoch
                << " was empty; consider raising train.entropy_bonus above 0\n";
    }
    EpochLog log;
    log.epoch = epoch;
    log.phase = "rl";
    log.loss = st.loss;
    log.mean_reward = st.mean_reward;
    const auto ev = validate(params, ctx, config);
    log.wallclock_s = seconds_since(t0);
    record_epoch(result, log, ev, params, on_epoch);
  }
  return result;
}

std::vector<double> bandit_gradient(std::span<const double> logits, std::span<const double> rewards, double baseline,
                                    num::Rng& rng) {
  if (logits.size() != rewards.size() || logits.empty()) throw ContractError("bandit: logits/rewards size mismatch");
  num::Array l = num::Array::zeros(1, logits.size());
  std::copy(logits.begin(), logits.end(), l.data().begin());
  num::Tape tape;
  const Var lp = tape.log_softmax(tape.param("logits", l));
  const auto d = model::retrieval_decide(tape.value(lp), model::DecodeMode::Sample, rng);
  const Var loss = tape.scale(tape.pick(lp, d.index), -(rewards[d.index] - baseline));
  const auto g = tape.backward(loss);
  const auto s = g.at("logits").data();
  return {s.begin(), s.end()};
}

std::vector<double> run_bandit(const BanditConfig& config, std::uint64_t seed) {
  const std::size_t n = config.rewards.size();
  if (n == 0) throw ContractError("bandit: need at least one action");
  num::ParamStore params;
  params.emplace("logits", num::Array::zeros(1, n));
  num::OptimizerConfig oc;
  oc.algorithm = num::Algorithm::Sgd;
  oc.lr = config.lr;
  oc.clip_norm = 0.0;
  num::Optimizer opt(oc);
  num::Rng rng(seed);
  double b = 0.0;
  bool have = false;
  std::vector<double> p0;
  p0.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    num::Tape tape;
    const Var lp = tape.log_softmax(tape.param("logits", params.at("logits")));
    const auto d = model::retrieval_decide(tape.value(lp), model::DecodeMode::Sample, rng);
    const double r = config.rewards[d.index];
    const double adv = r - (config.baseline && have ? b : 0.0);
    opt.step(params, tape.backward(tape.scale(tape.pick(lp, d.index), -adv)));
    if (config.baseline) {
      b = have ? config.ema_decay * b + (1.0 - config.ema_decay) * r : r;
      have = true;
    }
    const auto l = params.at("logits").data();
    const double mx = *std::max_element(l.begin(), l.end());
    double z = 0.0;
    for (const double v : l) z += std::exp(v - mx);
    p0.push_back(std::exp(l[0] - mx) / z);
  }
  return p0;
}

}  // namespace hrgr::training
