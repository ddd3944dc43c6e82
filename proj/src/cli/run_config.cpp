#include "hrgr/cli/run_config.hpp"

#include <cmath>

#include "hrgr/corpus/dataset_io.hpp"
#include "hrgr/errors.hpp"
#include "hrgr/model/agent.hpp"
#include "hrgr/model/checkpoint.hpp"

namespace hrgr::cli {

using nlohmann::json;
using training::read_key;
using training::reject_unknown_keys;

void RunConfig::validate() const {
  try {
    corpus.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("corpus: ") + e.what());
  }
  for (const double r : {split.train, split.val, split.test}) {
    if (!(r >= 0)) throw ConfigError("split ratios must be >= 0");
  }
  if (std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1, got " +
                      std::to_string(split.train + split.val + split.test));
  }
  if (!(templates.df_fraction > 0 && templates.df_fraction <= 1) && templates.df_threshold == 0) {
    throw ConfigError("templates.df_fraction must lie in (0, 1]");
  }
  if (vocab_min_freq < 1) throw ConfigError("vocab_min_freq must be >= 1");
  if (model.hidden == 0 || model.embed == 0 || model.attention == 0 || model.sentence_layers == 0) {
    throw ConfigError("model sizes must be positive");
  }
  train.validate();
  model::parse_ablation(ablation);
  if (eval_split != "train" && eval_split != "val" && eval_split != "test") {
    throw ConfigError("eval_split must be train, val or test");
  }
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required: set \"seed\" in the config or pass --seed");
  return *seed;
}

json to_json(const RunConfig& c) {
  const auto& s = c.corpus;
  json j;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["corpus"] = {{"n_samples", s.n_samples},
                 {"n_normal_findings", s.n_normal_findings},
                 {"n_abnormal_findings", s.n_abnormal_findings},
                 {"regions", s.regions},
                 {"feature_dim", s.feature_dim},
                 {"noise_sigma", s.noise_sigma},
                 {"template_variant_count", s.template_variant_count},
                 {"abnormal_rate", s.abnormal_rate},
                 {"mention_rate", s.mention_rate},
                 {"max_sentences", s.max_sentences},
                 {"max_tokens", s.max_tokens},
                 {"severities", s.grammar.severities},
                 {"evidence_clause", s.grammar.evidence_clause}};
  j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
  j["templates"] = {{"df_fraction", c.templates.df_fraction},
                    {"df_threshold", c.templates.df_threshold},
                    {"stop_words", c.templates.rule.stop_words},
                    {"order_insensitive", c.templates.rule.order_insensitive}};
  j["vocab_min_freq"] = c.vocab_min_freq;
  j["model"] = {{"hidden", c.model.hidden},
                {"embed", c.model.embed},
                {"attention", c.model.attention},
                {"sentence_layers", c.model.sentence_layers}};
  j["train"] = c.train;
  j["ablation"] = c.ablation;
  j["eval_split"] = c.eval_split;
  j["paths"] = {{"data_dir", c.paths.data_dir}, {"run_dir", c.paths.run_dir}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  reject_unknown_keys(j,
                      {"seed", "corpus", "split", "templates", "vocab_min_freq", "model", "train", "ablation",
                       "eval_split", "paths"},
                      "config");
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("config.seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("corpus")) {
    const auto& s = j["corpus"];
    const std::string w = "corpus";
    reject_unknown_keys(s,
                        {"n_samples", "n_normal_findings", "n_abnormal_findings", "regions", "feature_dim",
                         "noise_sigma", "template_variant_count", "abnormal_rate", "mention_rate", "max_sentences",
                         "max_tokens", "severities", "evidence_clause"},
                        w);
    auto& o = c.corpus;
    read_key(s, "n_samples", o.n_samples, w);
    read_key(s, "n_normal_findings", o.n_normal_findings, w);
    read_key(s, "n_abnormal_findings", o.n_abnormal_findings, w);
    read_key(s, "regions", o.regions, w);
    read_key(s, "feature_dim", o.feature_dim, w);
    read_key(s, "noise_sigma", o.noise_sigma, w);
    read_key(s, "template_variant_count", o.template_variant_count, w);
    read_key(s, "abnormal_rate", o.abnormal_rate, w);
    read_key(s, "mention_rate", o.mention_rate, w);
    read_key(s, "max_sentences", o.max_sentences, w);
    read_key(s, "max_tokens", o.max_tokens, w);
    read_key(s, "severities", o.grammar.severities, w);
    read_key(s, "evidence_clause", o.grammar.evidence_clause, w);
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    reject_unknown_keys(s, {"train", "val", "test"}, "split");
    read_key(s, "train", c.split.train, "split");
    read_key(s, "val", c.split.val, "split");
    read_key(s, "test", c.split.test, "split");
  }
  if (j.contains("templates")) {
    const auto& s = j["templates"];
    reject_unknown_keys(s, {"df_fraction", "df_threshold", "stop_words", "order_insensitive"}, "templates");
    read_key(s, "df_fraction", c.templates.df_fraction, "templates");
    read_key(s, "df_threshold", c.templates.df_threshold, "templates");
    read_key(s, "stop_words", c.templates.rule.stop_words, "templates");
    read_key(s, "order_insensitive", c.templates.rule.order_insensitive, "templates");
  }
  read_key(j, "vocab_min_freq", c.vocab_min_freq, "config");
  if (j.contains("model")) {
    const auto& s = j["model"];
    reject_unknown_keys(s, {"hidden", "embed", "attention", "sentence_layers"}, "model");
    read_key(s, "hidden", c.model.hidden, "model");
    read_key(s, "embed", c.model.embed, "model");
    read_key(s, "attention", c.model.attention, "model");
    read_key(s, "sentence_layers", c.model.sentence_layers, "model");
  }
  if (j.contains("train")) training::from_json(j["train"], c.train);
  read_key(j, "ablation", c.ablation, "config");
  read_key(j, "eval_split", c.eval_split, "config");
  if (j.contains("paths")) {
    const auto& s = j["paths"];
    reject_unknown_keys(s, {"data_dir", "run_dir"}, "paths");
    read_key(s, "data_dir", c.paths.data_dir, "paths");
    read_key(s, "run_dir", c.paths.run_dir, "paths");
  }
  c.validate();
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::string text;
    try {
      text = corpus::read_file(path);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + ": not valid JSON");
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
  }
  for (const auto& o : overrides) apply_override(j, o);
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& c) { return model::fnv1a_hex(to_json(c).dump()); }

}  // namespace hrgr::cli
