#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hrgr/corpus/templates.hpp"
#include "hrgr/corpus/vocabulary.hpp"
#include "hrgr/metrics/ngram.hpp"
#include "hrgr/model/agent.hpp"
#include "hrgr/numerics/optimizer.hpp"
#include "hrgr/training/config.hpp"

namespace hrgr::training {

// Everything a training run reads but never modifies.
struct TrainContext {
  std::span<const corpus::ReportSample> train;
  std::span<const corpus::ReportSample> val;
  const corpus::TemplateDatabase* templates = nullptr;
  const corpus::Vocabulary* vocab = nullptr;
  const metrics::NgramStats* report_stats = nullptr;  // idf for every CIDEr: rewards and validation
  std::vector<std::string> terms;                     // abnormality terms for evaluation
  model::Ablation ablation = model::Ablation::None;
};

struct EpochLog {
  int epoch = 0;
  std::string phase;  // "xe" or "rl"
  double loss = 0.0;
  double val_cider = 0.0;
  double val_bleu1 = 0.0;
  double retrieval_fraction = 0.0;
  double mean_sentences = 0.0;
  double wallclock_s = 0.0;
  double mean_reward = 0.0;  // rl only: mean CIDEr of sampled reports
  nlohmann::json to_json() const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Sum over sentences of BCE on the stop flag (0 while gold sentences remain,
// 1 right after the last), CE on the retrieval action (the gold sentence's
// template group, else 0) and, for action-0 sentences only, token CE over the
// gold tokens plus EOS. A stop step past max_sentences is never evaluated and
// gets no term.
num::Var xe_loss(model::Network& net, const corpus::ReportSample& sample, const corpus::TemplateDatabase& templates,
                 const corpus::Vocabulary& vocab, const model::DecodeLimits& limits);

// One pass over `ctx.train` in an order shuffled by `rng`; returns the mean loss.
double xe_epoch(model::ModelParameters& params, const TrainContext& ctx, num::Optimizer& optimizer, int batch_size,
                const model::DecodeLimits& limits, num::Rng& rng, int epoch);

struct PhaseResult {
  model::ModelParameters best;  // parameters at the best validation CIDEr
  int best_epoch = 0;           // 1-based
  double best_val_cider = 0.0;
  std::vector<EpochLog> history;
};

// XE pretraining. `params` ends at the last epoch's values.
PhaseResult train_xe(model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                     std::uint64_t seed, const EpochCallback& on_epoch = {});

// EMA reward baselines carried across RL batches.
struct Baselines {
  double b_r = 0.0;
  double b_g = 0.0;
  bool have_r = false;
  bool have_g = false;
};

struct RlBatch {
  num::Gradients grads;                // averaged over the batch, before group filtering
  std::vector<model::Rollout> rollouts;
  double mean_reward = 0.0;            // mean CIDEr of the sampled reports
  double loss = 0.0;
  std::vector<double> sentence_returns;  // all R^r in the batch, for the baseline update
  std::vector<double> word_returns;      // all R^g in the batch
};

// Samples one episode per item and builds the REINFORCE gradient. The sample
// stream of item k is seeded from (seed, epoch, k), so batches are reproducible
// independently of each other.
RlBatch rl_batch(const model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                 std::span<const std::size_t> indices, const Baselines& baselines, std::uint64_t seed, int epoch);

// Whether a parameter receives RL updates under this config.
bool rl_updates(const std::string& name, const TrainConfig& config);

struct RlEpochStats {
  double loss = 0.0;
  double mean_reward = 0.0;
  double empty_fraction = 0.0;  // fraction of sampled reports with no sentence
  bool degenerate = false;      // every sampled report was empty
};

RlEpochStats rl_epoch(model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                      num::Optimizer& optimizer, Baselines& baselines, std::uint64_t seed, int epoch);

// RL fine-tuning from the current parameters. Selection is over RL epochs only.
PhaseResult train_rl(model::ModelParameters& params, const TrainContext& ctx, const TrainConfig& config,
                     std::uint64_t seed, const EpochCallback& on_epoch = {});

// Multi-armed bandit driven by the same score-function update as the agent:
// loss = -(r - b) log p(a). Returns P(action 0) after each step.
struct BanditConfig {
  std::vector<double> rewards{1.0, 0.0, 0.0};
  int steps = 2000;
  double lr = 0.1;
  bool baseline = true;
  double ema_decay = 0.95;
};
std::vector<double> run_bandit(const BanditConfig& config, std::uint64_t seed);

// Single-sample REINFORCE gradient w.r.t. the bandit logits.
std::vector<double> bandit_gradient(std::span<const double> logits, std::span<const double> rewards, double baseline,
                                    num::Rng& rng);

}  // namespace hrgr::training
