#include "hrgr/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace hrgr::num {

bool GradCheckReport::passed() const {
  if (!error.empty()) return false;
  return std::all_of(params.begin(), params.end(),
                     [&](const ParamCheck& p) { return p.max_rel_error < tolerance; });
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& p : params) w = std::max(w, p.max_rel_error);
  return w;
}

GradCheckReport grad_check(const LossBuilder& fn, ParamStore& params, double h, double tol) {
  GradCheckReport report;
  report.tolerance = tol;
  auto evaluate = [&]() {
    Tape tape;
    return tape.scalar(fn(tape, params));
  };
  try {
    Gradients analytic;
    {
      Tape tape;
      analytic = tape.backward(fn(tape, params));
    }
    for (auto& [name, array] : params) {
      ParamCheck check;
      check.name = name;
      const auto git = analytic.find(name);
      for (std::size_t i = 0; i < array.size(); ++i) {
        const double saved = array[i];
        array[i] = saved + h;
        const double up = evaluate();
        array[i] = saved - h;
        const double down = evaluate();
        array[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = git == analytic.end() ? 0.0 : git->second[i];
        double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        if (std::isnan(rel)) rel = std::numeric_limits<double>::infinity();
        if (i == 0 || rel > check.max_rel_error) {
          check.max_rel_error = rel;
          check.worst_index = i;
          check.analytic_at_worst = a;
          check.numeric_at_worst = numeric;
        }
      }
      report.params.push_back(std::move(check));
    }
  } catch (const std::exception& e) {
    report.error = e.what();
  }
  return report;
}

}  // namespace hrgr::num
