#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hrgr/numerics/array.hpp"
#include "hrgr/numerics/tape.hpp"

namespace hrgr::num {

// Builds a scalar loss on the given tape from the given parameters. Must be
// deterministic: it is re-run once per perturbed entry.
using LossBuilder = std::function<Var(Tape&, const ParamStore&)>;

struct ParamCheck {
  std::string name;
  // max over entries of |analytic - numeric| / max(1, |analytic|, |numeric|)
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double tolerance = 0.0;
  std::string error;  // set when the loss builder threw

  bool passed() const;
  double worst() const;
};

// Compares reverse-mode gradients with central finite differences of step h.
// Never throws; failures are reported.
GradCheckReport grad_check(const LossBuilder& fn, ParamStore& params, double h, double tol);

}  // namespace hrgr::num
