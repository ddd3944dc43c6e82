#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hrgr/corpus/synth.hpp"
#include "hrgr/metrics/ngram.hpp"
#include "hrgr/model/agent.hpp"
#include "hrgr/numerics/optimizer.hpp"

namespace hrgr::training {

struct BaselineConfig {
  bool enabled = true;
  double ema_decay = 0.95;
  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

struct PostprocessConfig {
  bool enabled = true;
  // keyword -> normal sentence, applied in this order
  std::vector<std::pair<std::string, std::string>> keyword_map = corpus::default_keyword_map();
  friend bool operator==(const PostprocessConfig&, const PostprocessConfig&) = default;
};

struct TrainConfig {
  int xe_epochs = 30;
  int rl_epochs = 30;
  double lr_xe = 2e-3;
  double lr_rl = 5e-5;
  int batch_size = 16;
  double gamma = 0.95;
  num::Algorithm optimizer = num::Algorithm::Adam;
  double clip_norm = 5.0;
  model::DecodeLimits limits;  // stop_threshold lives here
  BaselineConfig baseline;
  PostprocessConfig postprocess;
  bool rl_update_stop = true;    // stop head learns from sentence returns during RL
  bool rl_update_trunk = false;  // encoder and sentence decoder stay at their XE values during RL
  double entropy_bonus = 0.0;    // weight of the stop-decision entropy in the RL loss
  bool cider_d = false;          // rewards and reported CIDEr use CIDEr-D when set
  int val_limit = 0;             // per-epoch validation on the first N samples; 0 = all

  void validate() const;
  metrics::CiderOptions cider_options() const { return {cider_d, 6.0}; }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Strict: unknown keys are a ConfigError, missing keys keep their defaults.
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Helpers shared with the cli config parser.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where);

[[noreturn]] void throw_config_type_error(const std::string& key, const std::string& detail);

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_config_type_error(where + "." + key, e.what());
  }
}

}  // namespace hrgr::training
