#include "ransom/hvp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ransom/error.hpp"

namespace ransom {

double central_difference_epsilon(const ParamVector& x, const ParamVector& d) {
  const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  return root_eps * (1.0 + norms(x).l2) / std::max(norms(d).l2, 1e-12);
}

ParamVector hvp_central_difference(const StochasticOracle& problem, const ParamVector& x,
                                   const ParamVector& d, Batch batch, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("central difference epsilon must be > 0");
  require_same_layout(x, d, "hvp_central_difference");
  ParamVector plus = x;
  plus.axpy(epsilon, d);
  ParamVector minus = x;
  minus.axpy(-epsilon, d);
  ParamVector h = problem.loss_gradient(plus, batch).gradient;
  h -= problem.loss_gradient(minus, batch).gradient;
  h *= 1.0 / (2.0 * epsilon);
  return h;
}

namespace {

void check_finite(const OracleEval& eval) {
  require_finite(eval.gradient, "oracle gradient");
  if (eval.hvp) require_finite(*eval.hvp, "oracle hvp");
  if (!std::isfinite(eval.loss)) throw NumericError("oracle loss is not finite", "loss");
}

}  // namespace

OracleEval joint_eval(const StochasticOracle& problem, const ParamVector& x, const ParamVector& d,
                      Batch batch, HvpStrategy strategy, const std::optional<RngState>& noise) {
  if (batch.empty()) throw ConfigError("joint_eval needs a nonempty batch");
  require_same_layout(x, d, "joint_eval");
  OracleEval eval;
  switch (strategy) {
    case HvpStrategy::Analytic:
    case HvpStrategy::BackpropForwardOverReverse:
      eval = problem.joint(x, d, batch);
      break;
    case HvpStrategy::CentralDifference: {
      auto lg = problem.loss_gradient(x, batch);
      eval.loss = lg.loss;
      eval.gradient = std::move(lg.gradient);
      if (std::all_of(d.values().begin(), d.values().end(), [](double v) { return v == 0.0; })) {
        eval.hvp = ParamVector::zeros_like(d);
      } else {
        eval.hvp = hvp_central_difference(problem, x, d, batch, central_difference_epsilon(x, d));
      }
      eval.batch_indices.assign(batch.begin(), batch.end());
      break;
    }
  }
  if (noise) problem.perturb(eval, d, batch, *noise);
  check_finite(eval);
  return eval;
}

OracleEval gradient_eval(const StochasticOracle& problem, const ParamVector& x, Batch batch,
                         const std::optional<RngState>& noise) {
  if (batch.empty()) throw ConfigError("gradient_eval needs a nonempty batch");
  auto lg = problem.loss_gradient(x, batch);
  OracleEval eval;
  eval.loss = lg.loss;
  eval.gradient = std::move(lg.gradient);
  eval.batch_indices.assign(batch.begin(), batch.end());
  if (noise) problem.perturb(eval, ParamVector::zeros_like(x), batch, *noise);
  check_finite(eval);
  return eval;
}

}  // namespace ransom
