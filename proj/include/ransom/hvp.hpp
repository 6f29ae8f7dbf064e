#pragma once

#include <optional>

#include "ransom/oracle.hpp"

namespace ransom {

/// How h = (1/B) sum_xi Hess f_xi(x) d is obtained.
enum class HvpStrategy {
  Analytic,                    ///< closed-form Hessian action supplied by the problem
  BackpropForwardOverReverse,  ///< directional forward pass through backprop (MLP)
  CentralDifference,           ///< two extra batch gradients at x +/- eps d
};

/// eps = sqrt(machine eps) (1 + ||x||_2) / max(||d||_2, 1e-12)
double central_difference_epsilon(const ParamVector& x, const ParamVector& d);

/// (grad f_batch(x + eps d) - grad f_batch(x - eps d)) / (2 eps)
ParamVector hvp_central_difference(const StochasticOracle& problem, const ParamVector& x,
                                   const ParamVector& d, Batch batch, double epsilon);

/// Gradient and HVP on the same batch at x, followed by the problem's noise
/// model when `noise` is given. Analytic and BackpropForwardOverReverse both
/// use the problem's exact fused evaluation (closed form for quadratics and
/// matrix completion, forward-over-reverse for the MLP). Throws NumericError
/// naming the offending block if anything is non-finite.
OracleEval joint_eval(const StochasticOracle& problem, const ParamVector& x, const ParamVector& d,
                      Batch batch, HvpStrategy strategy,
                      const std::optional<RngState>& noise = std::nullopt);

/// Gradient only (same noise model, no HVP).
OracleEval gradient_eval(const StochasticOracle& problem, const ParamVector& x, Batch batch,
                         const std::optional<RngState>& noise = std::nullopt);

}  // namespace ransom
