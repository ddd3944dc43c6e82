#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hrgr/corpus/synth.hpp"
#include "hrgr/corpus/templates.hpp"
#include "hrgr/model/parameters.hpp"
#include "hrgr/training/config.hpp"

namespace hrgr::cli {

struct SplitRatio {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
  friend bool operator==(const SplitRatio&, const SplitRatio&) = default;
};

struct TemplateConfig {
  double df_fraction = 0.02;     // threshold as a fraction of training documents
  std::size_t df_threshold = 0;  // absolute threshold; overrides df_fraction when > 0
  corpus::NormalizationRule rule;
  friend bool operator==(const TemplateConfig&, const TemplateConfig&) = default;
};

struct ModelConfig {
  std::size_t hidden = 64;
  std::size_t embed = 64;
  std::size_t attention = 64;
  std::size_t sentence_layers = 2;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Paths {
  std::string data_dir = "data";
  std::string run_dir = "run";
  friend bool operator==(const Paths&, const Paths&) = default;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;  // required by every command
  corpus::SynthConfig corpus;
  SplitRatio split;
  TemplateConfig templates;
  int vocab_min_freq = 3;
  ModelConfig model;
  training::TrainConfig train;
  std::string ablation = "none";
  std::string eval_split = "test";
  Paths paths;

  void validate() const;
  std::uint64_t require_seed() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& c);
// Strict: unknown keys are rejected; missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);

// Applies "a.b.c=value" to a JSON tree. The value is parsed as JSON when it
// parses, otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

// FNV-1a of the canonical JSON dump.
std::string config_hash(const RunConfig& c);

}  // namespace hrgr::cli
