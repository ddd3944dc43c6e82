#include "hrgr/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hrgr/corpus/dataset_io.hpp"
#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/errors.hpp"
#include "hrgr/model/checkpoint.hpp"
#include "hrgr/training/evaluate.hpp"
#include "hrgr/training/trainer.hpp"

namespace hrgr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path out_dir(const CommandOptions& opt, const std::string& fallback) {
  return fs::path(opt.out.empty() ? fallback : opt.out);
}

void write_config(const fs::path& dir, const std::string& command, const RunConfig& c) {
  corpus::write_file(dir / ("config." + command + ".json"), to_json(c).dump(2) + "\n");
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) throw DataError(p.string() + " already exists; pass --force to overwrite");
}

struct Data {
  std::vector<corpus::ReportSample> train, val, test;
  corpus::TemplateDatabase templates;
  corpus::Vocabulary vocab;
};

std::vector<corpus::ReportSample> load_split(const RunConfig& c, const std::string& name) {
  return corpus::load_jsonl(fs::path(c.paths.data_dir) / (name + ".jsonl"));
}

// Generation-only models are built without a template database.
corpus::TemplateDatabase templates_for(const RunConfig& c, model::Ablation ablation) {
  const auto db = corpus::load_templates(fs::path(c.paths.data_dir) / "templates.json");
  if (ablation != model::Ablation::GenerationOnly) return db;
  return corpus::TemplateDatabase({}, db.df_threshold(), db.rule(), db.document_count());
}

model::ModelDims dims_for(const RunConfig& c, const corpus::ReportSample& any, const corpus::Vocabulary& vocab,
                          const corpus::TemplateDatabase& db) {
  model::ModelDims d;
  d.hidden = c.model.hidden;
  d.embed = c.model.embed;
  d.attention = c.model.attention;
  d.sentence_layers = c.model.sentence_layers;
  d.regions = any.features.rows();
  d.feature_dim = any.features.cols();
  d.vocab_size = vocab.size();
  d.n_templates = db.size();
  return d;
}

std::string join(const corpus::Sentence& s) { return corpus::detokenize(s); }

}  // namespace

SplitSizes split_sizes(std::size_t n, const SplitRatio& ratio) {
  SplitSizes s;
  s.train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio.train));
  s.val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio.val));
  if (s.train + s.val > n) s.val = n - s.train;
  s.test = n - s.train - s.val;
  return s;
}

std::string template_summary(const corpus::TemplateDatabase& db) {
  std::ostringstream os;
  const double docs = static_cast<double>(std::max<std::size_t>(1, db.document_count()));
  os << "template groups: " << db.size() << " (df threshold " << db.df_threshold() << " of " << db.document_count()
     << " training documents)\n";
  for (std::size_t g = 1; g <= db.size(); ++g) {
    const auto& grp = db.group(g);
    os << "#" << g << "  df " << std::fixed << std::setprecision(2) << 100.0 * static_cast<double>(grp.df()) / docs
       << "%\n";
    for (std::size_t v = 0; v < grp.variants.size(); ++v) {
      const auto& var = grp.variants[v];
      os << "    " << std::setw(6) << std::setprecision(2) << 100.0 * static_cast<double>(var.df) / docs << "%  "
         << join(var.sentence) << (v == grp.canonical ? "   (canonical)" : "") << "\n";
    }
  }
  return os.str();
}

void cmd_gen_data(const CommandOptions& opt, std::ostream& log) {
  const auto& c = opt.config;
  const std::uint64_t seed = c.require_seed();
  const fs::path dir = out_dir(opt, c.paths.data_dir);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) refuse_overwrite(dir / f, opt.force);
  num::Rng rng(num::derive_seed(seed, {0x67656e}));
  auto samples = corpus::synth_generate(c.corpus, rng);
  const auto sizes = split_sizes(samples.size(), c.split);
  const auto first = samples.begin();
  const std::vector<corpus::ReportSample> train(first, first + static_cast<std::ptrdiff_t>(sizes.train));
  const std::vector<corpus::ReportSample> val(first + static_cast<std::ptrdiff_t>(sizes.train),
                                              first + static_cast<std::ptrdiff_t>(sizes.train + sizes.val));
  const std::vector<corpus::ReportSample> test(first + static_cast<std::ptrdiff_t>(sizes.train + sizes.val),
                                               samples.end());
  corpus::save_jsonl(dir / "train.jsonl", train);
  corpus::save_jsonl(dir / "val.jsonl", val);
  corpus::save_jsonl(dir / "test.jsonl", test);
  const json prov{{"generator", "synthetic grammar corpus"},
                  {"seed", seed},
                  {"config_hash", config_hash(c)},
                  {"sizes", {{"train", sizes.train}, {"val", sizes.val}, {"test", sizes.test}}},
                  {"template_sentence_fraction", corpus::template_sentence_fraction(samples)},
                  {"abnormal_terms", corpus::abnormal_term_list(c.corpus.n_abnormal_findings)}};
  corpus::write_file(dir / "provenance.json", prov.dump(2) + "\n");
  write_config(dir, "gen-data", c);
  log << "wrote " << sizes.train << "/" << sizes.val << "/" << sizes.test << " samples to " << dir.string() << "\n";
}

void cmd_mine_templates(const CommandOptions& opt, std::ostream& log) {
  const auto& c = opt.config;
  c.require_seed();
  const fs::path dir = out_dir(opt, c.paths.data_dir);
  refuse_overwrite(dir / "templates.json", opt.force);
  const auto train = load_split(c, "train");
  if (train.empty()) throw DataError("training split is empty");
  std::size_t threshold = c.templates.df_threshold;
  if (threshold == 0) {
    threshold = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(c.templates.df_fraction * static_cast<double>(train.size()))));
  }
  const auto candidates = corpus::mine_templates(train, threshold);
  if (candidates.empty()) {
    throw DataError("no sentence reaches document frequency " + std::to_string(threshold) + " in " +
                    std::to_string(train.size()) + " training reports; lower templates.df_threshold or "
                    "templates.df_fraction");
  }
  const auto db = corpus::group_templates(candidates, threshold, c.templates.rule, train.size());
  const auto vocab = corpus::Vocabulary::build(train, c.vocab_min_freq);
  corpus::save_templates(dir / "templates.json", db);
  corpus::save_vocab(dir / "vocab.json", vocab);
  const std::string summary = template_summary(db);
  corpus::write_file(dir / "templates_summary.txt", summary);
  write_config(dir, "mine-templates", c);
  log << summary << "vocabulary: " << vocab.size() << " tokens\n";
}

void cmd_train(const CommandOptions& opt, std::ostream& log) {
  const auto& c = opt.config;
  const std::uint64_t seed = c.require_seed();
  const auto ablation = model::parse_ablation(c.ablation);
  const fs::path dir = out_dir(opt, c.paths.run_dir);
  refuse_overwrite(dir / "model.ckpt", opt.force);

  const auto train = load_split(c, "train");
  const auto val = load_split(c, "val");
  if (train.empty() || val.empty()) throw DataError("train and val splits must be nonempty");
  const auto db = templates_for(c, ablation);
  const auto vocab = corpus::load_vocab(fs::path(c.paths.data_dir) / "vocab.json");
  const auto rstats = training::report_stats(train);
  training::TrainContext ctx;
  ctx.train = train;
  ctx.val = val;
  ctx.templates = &db;
  ctx.vocab = &vocab;
  ctx.report_stats = &rstats;
  ctx.terms = corpus::abnormal_term_list(c.corpus.n_abnormal_findings);
  ctx.ablation = ablation;

  const auto dims = dims_for(c, train.front(), vocab, db);
  num::Rng init_rng(num::derive_seed(seed, {0x696e6974}));
  auto params = model::ModelParameters::init(dims, init_rng);
  log << "model " << dims.str() << ", " << params.count() << " parameters\n";

  fs::create_directories(dir);
  std::ofstream train_log(dir / "train_log.jsonl");
  const auto on_epoch = [&](const training::EpochLog& e) {
    const std::string line = e.to_json().dump();
    train_log << line << "\n" << std::flush;
    log << line << "\n" << std::flush;
  };
  const std::string hash = config_hash(c);
  auto xe = training::train_xe(params, ctx, c.train, seed, on_epoch);
  model::save_checkpoint(dir / "xe.ckpt", xe.best, {xe.best_epoch, seed, hash});
  json summary{{"xe_best_epoch", xe.best_epoch}, {"xe_best_val_cider", xe.best_val_cider}};
  model::ModelParameters final_params = xe.best;
  int final_epoch = xe.best_epoch;
  if (c.train.rl_epochs > 0) {
    params = xe.best;
    auto rl = training::train_rl(params, ctx, c.train, seed, on_epoch);
    final_params = rl.best;
    final_epoch = c.train.xe_epochs + rl.best_epoch;
    summary["rl_best_epoch"] = rl.best_epoch;
    summary["rl_best_val_cider"] = rl.best_val_cider;
  }
  model::save_checkpoint(dir / "model.ckpt", final_params, {final_epoch, seed, hash});
  corpus::write_file(dir / "train_summary.json", summary.dump(2) + "\n");
  write_config(dir, "train", c);
  log << "saved " << (dir / "model.ckpt").string() << "\n";
}

namespace {

struct Loaded {
  corpus::TemplateDatabase db;
  corpus::Vocabulary vocab;
  model::Checkpoint ck;
};

Loaded load_model(const RunConfig& c, model::Ablation ablation) {
  Loaded l;
  l.db = templates_for(c, ablation);
  l.vocab = corpus::load_vocab(fs::path(c.paths.data_dir) / "vocab.json");
  const fs::path ck_path = fs::path(c.paths.run_dir) / "model.ckpt";
  l.ck = model::load_checkpoint(ck_path);
  const auto& d = l.ck.params.dims();
  if (d.n_templates != l.db.size()) {
    throw DataError("checkpoint " + ck_path.string() + " was built for " + std::to_string(d.n_templates) +
                    " template groups but the template database " +
                    (fs::path(c.paths.data_dir) / "templates.json").string() + " has " +
                    std::to_string(l.db.size()) +
                    (ablation == model::Ablation::GenerationOnly ? " (generation-only uses none)" : ""));
  }
  if (d.vocab_size != l.vocab.size()) {
    throw DataError("checkpoint " + ck_path.string() + " was built for a vocabulary of " +
                    std::to_string(d.vocab_size) + " tokens but " +
                    (fs::path(c.paths.data_dir) / "vocab.json").string() + " has " + std::to_string(l.vocab.size()));
  }
  return l;
}

}  // namespace

void cmd_evaluate(const CommandOptions& opt, std::ostream& log) {
  const auto& c = opt.config;
  c.require_seed();
  const auto ablation = model::parse_ablation(c.ablation);
  const fs::path dir = out_dir(opt, c.paths.run_dir);
  const auto train = load_split(c, "train");
  const auto samples = load_split(c, c.eval_split);
  const auto l = load_model(c, ablation);
  const auto rstats = training::report_stats(train);
  const auto terms = corpus::abnormal_term_list(c.corpus.n_abnormal_findings);
  const auto ev = training::evaluate_split(samples, l.ck.params, l.db, l.vocab, rstats, terms, c.train, ablation);
  json metrics = ev.to_json();
  metrics["split"] = c.eval_split;
  metrics["ablation"] = c.ablation;
  metrics["postprocess"] = c.train.postprocess.enabled;
  metrics["checkpoint_epoch"] = l.ck.meta.epoch;
  corpus::write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  std::string outputs;
  for (const auto& o : ev.outputs) {
    json sentences = json::array();
    for (std::size_t i = 0; i < o.report.size(); ++i) {
      sentences.push_back({{"text", join(o.report[i])}, {"action", o.actions[i]}});
    }
    json post = json::array();
    for (const auto& s : o.postprocessed) post.push_back(join(s));
    outputs += json{{"id", o.id}, {"sentences", sentences}, {"postprocessed", post}}.dump() + "\n";
  }
  corpus::write_file(dir / "outputs.jsonl", outputs);
  write_config(dir, "evaluate", c);
  log << metrics.dump(2) << "\n";
}

void cmd_generate(const CommandOptions& opt, std::ostream& out) {
  const auto& c = opt.config;
  c.require_seed();
  if (opt.sample_id.empty()) throw ConfigError("generate needs --sample ID");
  const auto ablation = model::parse_ablation(c.ablation);
  const auto l = load_model(c, ablation);
  for (const char* split : {"test", "val", "train"}) {
    const fs::path p = fs::path(c.paths.data_dir) / (std::string(split) + ".jsonl");
    if (!fs::exists(p)) continue;
    for (const auto& s : corpus::load_jsonl(p)) {
      if (s.id != opt.sample_id) continue;
      const auto roll = model::greedy_report(l.ck.params, s, l.db, l.vocab, c.train.limits, ablation);
      for (const auto& st : roll.trace.sentences) {
        if (st.source == model::SentenceSource::Retrieved) {
          out << "[T:" << st.action << "] ";
        } else {
          out << "[G] ";
        }
        out << join(st.tokens) << "\n";
      }
      return;
    }
  }
  throw DataError("no sample with id '" + opt.sample_id + "' in " + c.paths.data_dir);
}

}  // namespace hrgr::cli
