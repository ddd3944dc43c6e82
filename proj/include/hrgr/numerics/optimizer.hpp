#pragma once

#include <cstdint>
#include <string>

#include "hrgr/numerics/array.hpp"

namespace hrgr::num {

enum class Algorithm { Sgd, Adam };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algorithm);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::Adam;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global L2 norm limit applied to the gradients before each step; <= 0 disables.
  double clip_norm = 5.0;
};

double global_norm(const Gradients& grads);

// First-order optimizer over a ParamStore. Parameters without an entry in the
// gradient map are left untouched (and keep no Adam state).
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // Applies one update and returns the global gradient norm before clipping.
  // Throws NumericError naming the first parameter with a non-finite gradient;
  // no parameter is modified in that case.
  double step(ParamStore& params, const Gradients& grads);

  const OptimizerConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::uint64_t steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::uint64_t t_ = 0;
  ParamStore m_;
  ParamStore v_;
};

}  // namespace hrgr::num
