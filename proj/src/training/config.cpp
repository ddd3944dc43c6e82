#include "hrgr/training/config.hpp"

#include <set>

#include "hrgr/errors.hpp"

namespace hrgr::training {

using nlohmann::json;

void throw_config_type_error(const std::string& key, const std::string& detail) {
  throw ConfigError("config key '" + key + "' has the wrong type: " + detail);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [k, v] : j.items()) {
    if (!names.count(k)) throw ConfigError("unknown config key '" + where + "." + k + "'");
  }
}

void TrainConfig::validate() const {
  if (xe_epochs < 0 || rl_epochs < 0) throw ConfigError("train: epoch counts must be >= 0");
  if (!(lr_xe > 0) || !(lr_rl > 0)) throw ConfigError("train: learning rates must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("train: gamma must lie in [0, 1]");
  if (!(limits.stop_threshold > 0 && limits.stop_threshold < 1)) {
    throw ConfigError("train: stop_threshold must lie in (0, 1)");
  }
  if (limits.max_sentences < 1 || limits.max_tokens < 1) throw ConfigError("train: limits must be >= 1");
  if (!(baseline.ema_decay >= 0 && baseline.ema_decay < 1)) throw ConfigError("train: ema_decay must lie in [0, 1)");
  if (entropy_bonus < 0) throw ConfigError("train: entropy_bonus must be >= 0");
  if (val_limit < 0) throw ConfigError("train: val_limit must be >= 0");
  for (const auto& [kw, sentence] : postprocess.keyword_map) {
    if (kw.empty() || sentence.empty()) throw ConfigError("train: keyword_map entries must be nonempty");
  }
}

void to_json(json& j, const TrainConfig& c) {
  json km = json::array();
  for (const auto& [k, s] : c.postprocess.keyword_map) km.push_back({{"keyword", k}, {"sentence", s}});
  j = json{{"xe_epochs", c.xe_epochs},
           {"rl_epochs", c.rl_epochs},
           {"lr_xe", c.lr_xe},
           {"lr_rl", c.lr_rl},
           {"batch_size", c.batch_size},
           {"gamma", c.gamma},
           {"optimizer", num::to_string(c.optimizer)},
           {"clip_norm", c.clip_norm},
           {"stop_threshold", c.limits.stop_threshold},
           {"limits", {{"max_sentences", c.limits.max_sentences}, {"max_tokens", c.limits.max_tokens}}},
           {"baseline", {{"enabled", c.baseline.enabled}, {"ema_decay", c.baseline.ema_decay}}},
           {"postprocess", {{"enabled", c.postprocess.enabled}, {"keyword_map", km}}},
           {"rl_update_stop", c.rl_update_stop},
           {"rl_update_trunk", c.rl_update_trunk},
           {"entropy_bonus", c.entropy_bonus},
           {"cider_d", c.cider_d},
           {"val_limit", c.val_limit}};
}

void from_json(const json& j, TrainConfig& c) {
  const std::string w = "train";
  reject_unknown_keys(j,
                      {"xe_epochs", "rl_epochs", "lr_xe", "lr_rl", "batch_size", "gamma", "optimizer", "clip_norm",
                       "stop_threshold", "limits", "baseline", "postprocess", "rl_update_stop", "rl_update_trunk",
                       "entropy_bonus", "cider_d", "val_limit"},
                      w);
  read_key(j, "xe_epochs", c.xe_epochs, w);
  read_key(j, "rl_epochs", c.rl_epochs, w);
  read_key(j, "lr_xe", c.lr_xe, w);
  read_key(j, "lr_rl", c.lr_rl, w);
  read_key(j, "batch_size", c.batch_size, w);
  read_key(j, "gamma", c.gamma, w);
  std::string opt = num::to_string(c.optimizer);
  read_key(j, "optimizer", opt, w);
  try {
    c.optimizer = num::parse_algorithm(opt);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("train.optimizer: ") + e.what());
  }
  read_key(j, "clip_norm", c.clip_norm, w);
  read_key(j, "stop_threshold", c.limits.stop_threshold, w);
  if (j.contains("limits")) {
    const auto& l = j["limits"];
    reject_unknown_keys(l, {"max_sentences", "max_tokens"}, w + ".limits");
    read_key(l, "max_sentences", c.limits.max_sentences, w + ".limits");
    read_key(l, "max_tokens", c.limits.max_tokens, w + ".limits");
  }
  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    reject_unknown_keys(b, {"enabled", "ema_decay"}, w + ".baseline");
    read_key(b, "enabled", c.baseline.enabled, w + ".baseline");
    read_key(b, "ema_decay", c.baseline.ema_decay, w + ".baseline");
  }
  if (j.contains("postprocess")) {
    const auto& p = j["postprocess"];
    reject_unknown_keys(p, {"enabled", "keyword_map"}, w + ".postprocess");
    read_key(p, "enabled", c.postprocess.enabled, w + ".postprocess");
    if (p.contains("keyword_map")) {
      const auto& km = p["keyword_map"];
      if (!km.is_array()) throw ConfigError("train.postprocess.keyword_map must be an array");
      c.postprocess.keyword_map.clear();
      for (const auto& e : km) {
        reject_unknown_keys(e, {"keyword", "sentence"}, w + ".postprocess.keyword_map[]");
        std::string k, s;
        read_key(e, "keyword", k, w + ".postprocess.keyword_map[]");
        read_key(e, "sentence", s, w + ".postprocess.keyword_map[]");
        c.postprocess.keyword_map.emplace_back(std::move(k), std::move(s));
      }
    }
  }
  read_key(j, "rl_update_stop", c.rl_update_stop, w);
  read_key(j, "rl_update_trunk", c.rl_update_trunk, w);
  read_key(j, "entropy_bonus", c.entropy_bonus, w);
  read_key(j, "cider_d", c.cider_d, w);
  read_key(j, "val_limit", c.val_limit, w);
  c.validate();
}

}  // namespace hrgr::training
