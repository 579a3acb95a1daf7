#include "adamoge/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adamoge/errors.hpp"

namespace adamoge {

namespace {

double evaluate(const LossBuilder& loss, ParameterStore& store, const std::string& where) {
  Tape tape;
  const double v = loss(tape, store).value()[0];
  if (!std::isfinite(v)) throw NumericError("non-finite loss during gradient check", where);
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& loss, ParameterStore& store, double eps,
                           const ParameterFilter& filter, double floor) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw std::invalid_argument("grad_check eps must lie in [1e-7, 1e-3]");
  if (!(floor > 0.0)) throw std::invalid_argument("grad_check floor must be positive");

  store.zero_grad();
  {
    Tape tape;
    Var root = loss(tape, store);
    if (!std::isfinite(root.value()[0])) throw NumericError("non-finite loss during gradient check", "initial point");
    tape.backward(root);
  }

  GradCheckResult result;
  for (auto& p : store) {
    if (!p.trainable || (filter && !filter(p))) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const std::string where = p.name + "[" + std::to_string(i) + "]";
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      const double up = evaluate(loss, store, where);
      p.value[i] = saved - eps;
      const double down = evaluate(loss, store, where);
      p.value[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p.grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        if (rel >= result.max_relative_error) {
          result.max_relative_error = rel;
          result.worst_parameter = where;
          result.analytic = analytic;
          result.numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace adamoge
