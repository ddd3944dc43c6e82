#include "hrgr/numerics/optimizer.hpp"

#include <cmath>

#include "hrgr/errors.hpp"

namespace hrgr::num {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "sgd") return Algorithm::Sgd;
  if (name == "adam") return Algorithm::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd|adam)");
}

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::Sgd ? "sgd" : "adam";
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.lr >= 0.0)) throw ConfigError("optimizer: lr must be >= 0");
}

double Optimizer::step(ParamStore& params, const Gradients& grads) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("optimizer: gradient for unknown parameter '" + name + "'");
    if (it->second.shape() != g.shape()) {
      throw DimensionError("optimizer: gradient for '" + name + "' has shape " + g.shape().str() +
                           ", parameter has " + it->second.shape().str());
    }
    if (!g.all_finite()) throw NumericError("optimizer: non-finite gradient for parameter '" + name + "'");
  }

  const double norm = global_norm(grads);
  const double clip = (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;
  ++t_;

  for (const auto& [name, g] : grads) {
    Array& p = params.find(name)->second;
    auto pd = p.data();
    const auto gd = g.data();
    if (config_.algorithm == Algorithm::Sgd) {
      for (std::size_t i = 0; i < pd.size(); ++i) pd[i] -= config_.lr * clip * gd[i];
      continue;
    }
    auto [mit, m_new] = m_.try_emplace(name, g.shape());
    auto [vit, v_new] = v_.try_emplace(name, g.shape());
    auto m = mit->second.data();
    auto v = vit->second.data();
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double gi = clip * gd[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      pd[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
  return norm;
}

}  // namespace hrgr::num
