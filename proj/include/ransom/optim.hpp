#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ransom/hvp.hpp"
#include "ransom/lmo.hpp"
#include "ransom/oracle.hpp"
#include "ransom/steps.hpp"

namespace ransom {

enum class OptimizerKind {
  RansomE,     ///< exponential steps, eta * HVP correction
  RansomB,     ///< beta steps inside a feasible set, Stein-weighted correction
  Sgdm,        ///< Polyak momentum, no correction
  Storm,       ///< gradient difference on a shared batch
  SomClassic,  ///< HVP at the previous point along the step taken
  SomUnif,     ///< HVP at a uniform point on the last segment
  SfwPolyak,   ///< Frank-Wolfe, deterministic step, Polyak momentum
  SfwSom,      ///< Frank-Wolfe, deterministic step, classic SOM correction
};

std::string_view optimizer_name(OptimizerKind kind);
/// Accepts the names returned by optimizer_name (e.g. "ransom-e", "sfw-polyak").
OptimizerKind optimizer_from_name(std::string_view name);
/// RanSOM-B and the Frank-Wolfe baselines keep x inside the geometry's ball.
bool is_constrained(OptimizerKind kind);

/// eta_t = eta0 * (t + 1)^(-power)
struct Schedule {
  double eta0 = 0.1;
  double power = 0.0;
  double at(std::int64_t t) const;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::RansomE;
  Schedule eta;
  double beta = 0.1;
  Geometry geometry;
  std::size_t batch_size = 8;
  std::size_t init_batch = 0;  ///< 0 means 10 * batch_size
  HvpStrategy hvp = HvpStrategy::Analytic;
  /// Unconstrained methods step along -m instead of the LMO direction.
  bool plain_step = false;
  /// Baselines draw step lengths from Exp(eta) instead of using eta.
  bool random_steps = false;
  /// SOM-Unif evaluates the midpoint HVP on its own batch.
  bool midpoint_fresh_batch = true;
  /// When false, delta is forced to zero (the correction ablation).
  bool correction = true;

  std::size_t effective_init_batch() const { return init_batch ? init_batch : 10 * batch_size; }
  /// Throws ConfigError on out-of-range values (beta outside (0, 1], eta_t >= 1 for
  /// beta steps or Frank-Wolfe, zero batch size, invalid geometry).
  void validate() const;
};

/// Complete optimizer state. Copying it is an exact snapshot; assigning a copy
/// back restores the run bit-for-bit.
struct OptimizerState {
  ParamVector x;
  ParamVector m;
  ParamVector last_direction;
  std::int64_t t = 0;
  Rng step_rng{RngState{}};
  Rng batch_rng{RngState{}};
  Rng midpoint_rng{RngState{}};
  RngState noise_root;
  RngState lmo_root;
  StepSample pending;
  /// Upper bound on the geometry norm of x (constrained methods only).
  double feasibility_bound = 0.0;
};

/// Per-step record: the step just taken and the batch loss at the new point.
struct StepRecord {
  std::int64_t t = 0;  ///< counter after the step
  double s = 0.0;
  double w = 0.0;
  double batch_loss = 0.0;
  bool degenerate = false;
};

/// Thrown when a constrained iterate leaves the feasible set. Indicates a bug.
class FeasibilityViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// x0 from the init stream, m0 = mean gradient over the initial batch (the
/// whole training set when init_batch >= dataset_size).
OptimizerState initialize(const StochasticOracle& problem, const OptimizerConfig& config,
                          const RngState& root);

/// Advances the state by one step of config.kind.
StepRecord step(OptimizerState& state, const StochasticOracle& problem,
                const OptimizerConfig& config);

/// ||m_t - grad f(x_t)||_2. Throws UnsupportedError without a full gradient.
double momentum_error(const OptimizerState& state, const StochasticOracle& problem);

/// Update direction used at the current state (LMO of m, or v - x when constrained).
LmoResult direction(const OptimizerState& state, const OptimizerConfig& config);

struct TheoryParams {
  double eta = 1.0;
  double beta = 1.0;
};

/// eta = T^{-(q(p-1)+p)/(2q(p-1)+p)}, beta = T^{-q(p-1)/(2q(p-1)+p)}, clamped to (0, 1].
TheoryParams theory_schedule(double horizon, double p, double q);

}  // namespace ransom
