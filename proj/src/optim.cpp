#include "ransom/optim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "ransom/error.hpp"

namespace ransom {

namespace {

constexpr std::array<std::pair<OptimizerKind, std::string_view>, 8> kNames{{
    {OptimizerKind::RansomE, "ransom-e"},
    {OptimizerKind::RansomB, "ransom-b"},
    {OptimizerKind::Sgdm, "sgdm"},
    {OptimizerKind::Storm, "storm"},
    {OptimizerKind::SomClassic, "som-classic"},
    {OptimizerKind::SomUnif, "som-unif"},
    {OptimizerKind::SfwPolyak, "sfw-polyak"},
    {OptimizerKind::SfwSom, "sfw-som"},
}};

constexpr double kFeasibilitySlack = 1e-6;

}  // namespace

std::string_view optimizer_name(OptimizerKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

OptimizerKind optimizer_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

bool is_constrained(OptimizerKind kind) {
  return kind == OptimizerKind::RansomB || kind == OptimizerKind::SfwPolyak ||
         kind == OptimizerKind::SfwSom;
}

double Schedule::at(std::int64_t t) const {
  if (power == 0.0) return eta0;
  return eta0 * std::pow(static_cast<double>(t + 1), -power);
}

void OptimizerConfig::validate() const {
  geometry.validate();
  if (!(eta.eta0 > 0.0) || !std::isfinite(eta.eta0)) throw ConfigError("eta must be > 0");
  if (!(eta.power >= 0.0)) throw ConfigError("eta schedule power must be >= 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must be in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (kind == OptimizerKind::RansomB && !(eta.eta0 < 1.0)) {
    throw ConfigError("ransom-b needs eta < 1 (beta-step parameter K = 1/eta - 1 > 0)");
  }
  if ((kind == OptimizerKind::SfwPolyak || kind == OptimizerKind::SfwSom) && eta.eta0 > 1.0) {
    throw ConfigError("frank-wolfe step eta must be <= 1");
  }
}

namespace {

double certified_norm(const Geometry& g, const ParamVector& x) {
  if (g.kind != GeometryKind::NuclearBall) return geometry_norm(g, x);
  // ||X||_* <= sqrt(min(r, c)) ||X||_F.
  const auto& block = x.layout()->blocks().front();
  const double k = static_cast<double>(std::min(block.shape.rows, block.shape.cols));
  return std::sqrt(k) * norms(x).l2;
}

void check_feasible(OptimizerState& state, const Geometry& g, double s) {
  state.feasibility_bound = (1.0 - s) * state.feasibility_bound + s * g.rho;
  double measured = state.feasibility_bound;
  if (g.kind == GeometryKind::L2Ball || g.kind == GeometryKind::LinfBall) {
    measured = geometry_norm(g, state.x);
  }
  if (!(measured <= g.rho * (1.0 + kFeasibilitySlack))) {
    throw FeasibilityViolation("iterate left the feasible set at t=" + std::to_string(state.t) +
                               ": norm " + std::to_string(measured) + " > rho " +
                               std::to_string(g.rho));
  }
}

std::vector<std::uint64_t> draw_batch(OptimizerState& state, const StochasticOracle& problem,
                                      std::size_t size) {
  return problem.sample_batch(state.batch_rng, size);
}

}  // namespace

OptimizerState initialize(const StochasticOracle& problem, const OptimizerConfig& config,
                          const RngState& root) {
  config.validate();
  OptimizerState state;
  Rng init(split_rng(root, Consumer::Init));
  state.x = problem.initial_point(init);
  state.step_rng = Rng(split_rng(root, Consumer::Step));
  state.batch_rng = Rng(split_rng(root, Consumer::Batch));
  state.midpoint_rng = Rng(split_rng(root, Consumer::Midpoint));
  state.noise_root = split_rng(root, Consumer::Noise);
  state.lmo_root = split_rng(root, Consumer::Lmo);
  state.last_direction = ParamVector::zeros_like(state.x);

  const std::size_t b_init = config.effective_init_batch();
  std::vector<std::uint64_t> batch;
  if (problem.dataset_size() > 0 && b_init >= problem.dataset_size()) {
    batch = all_indices(problem.dataset_size());
  } else {
    batch = draw_batch(state, problem, b_init);
  }
  state.m = gradient_eval(problem, state.x, batch, state.noise_root.derive(0)).gradient;

  if (is_constrained(config.kind)) {
    state.feasibility_bound = certified_norm(config.geometry, state.x);
    if (!(state.feasibility_bound <= config.geometry.rho * (1.0 + kFeasibilitySlack))) {
      throw ConfigError("initial point is not certifiably inside the constraint ball");
    }
  }
  return state;
}

LmoResult direction(const OptimizerState& state, const OptimizerConfig& config) {
  Rng start(state.lmo_root.derive(static_cast<std::uint64_t>(state.t)));
  if (!is_constrained(config.kind) && config.plain_step) {
    LmoResult r{ParamVector::zeros_like(state.m), false, false};
    r.direction.axpy(-1.0, state.m);
    r.degenerate = !(norms(state.m).l2 > 0.0);
    return r;
  }
  LmoResult r = lmo(config.geometry, state.m, start);
  if (is_constrained(config.kind)) {
    if (r.degenerate) return r;  // zero direction: stay put
    r.direction -= state.x;
  }
  return r;
}

StepRecord step(OptimizerState& state, const StochasticOracle& problem,
                const OptimizerConfig& config) {
  const double eta = config.eta.at(state.t);
  const RngState noise = state.noise_root.derive(static_cast<std::uint64_t>(state.t) + 1);
  const LmoResult dir = direction(state, config);
  const ParamVector& d = dir.direction;

  StepSample sample;
  switch (config.kind) {
    case OptimizerKind::RansomE:
      sample = sample_step(StepDistribution::exponential(eta), state.step_rng);
      break;
    case OptimizerKind::RansomB:
      sample = sample_step(StepDistribution::beta(eta), state.step_rng);
      break;
    case OptimizerKind::SfwPolyak:
    case OptimizerKind::SfwSom:
      sample = {eta, eta, eta};
      break;
    default:
      if (config.random_steps) {
        sample = sample_step(StepDistribution::exponential(eta), state.step_rng);
      } else {
        sample = {eta, eta, eta};
      }
      break;
  }

  const ParamVector x_prev = state.x;
  ParamVector taken = d;
  taken *= sample.s;
  state.x += taken;
  require_finite(state.x, "iterate");

  const auto batch = draw_batch(state, problem, config.batch_size);
  OracleEval eval;
  ParamVector delta = ParamVector::zeros_like(state.x);

  switch (config.kind) {
    case OptimizerKind::RansomE:
    case OptimizerKind::RansomB: {
      eval = joint_eval(problem, state.x, d, batch, config.hvp, noise);
      delta = std::move(*eval.hvp);
      delta *= config.kind == OptimizerKind::RansomE ? eta : sample.w;
      break;
    }
    case OptimizerKind::Sgdm:
    case OptimizerKind::SfwPolyak:
      eval = gradient_eval(problem, state.x, batch, noise);
      break;
    case OptimizerKind::Storm: {
      eval = gradient_eval(problem, state.x, batch, noise);
      delta = eval.gradient;
      delta -= gradient_eval(problem, x_prev, batch, noise).gradient;
      break;
    }
    case OptimizerKind::SomClassic:
    case OptimizerKind::SfwSom: {
      eval = gradient_eval(problem, state.x, batch, noise);
      delta = *joint_eval(problem, x_prev, taken, batch, config.hvp, noise.derive(1)).hvp;
      break;
    }
    case OptimizerKind::SomUnif: {
      eval = gradient_eval(problem, state.x, batch, noise);
      const double u = state.midpoint_rng.uniform();
      ParamVector mid = x_prev;
      mid.axpy(u, taken);
      std::vector<std::uint64_t> mid_batch =
          config.midpoint_fresh_batch ? draw_batch(state, problem, config.batch_size)
                                      : std::vector<std::uint64_t>(batch.begin(), batch.end());
      delta = *joint_eval(problem, mid, taken, mid_batch, config.hvp, noise.derive(2)).hvp;
      break;
    }
  }
  if (!config.correction) delta.fill(0.0);

  // m <- (1 - beta)(m + delta) + beta g
  state.m += delta;
  state.m *= 1.0 - config.beta;
  state.m.axpy(config.beta, eval.gradient);
  require_finite(state.m, "momentum");

  state.last_direction = d;
  state.pending = sample;
  ++state.t;
  if (is_constrained(config.kind)) check_feasible(state, config.geometry, dir.degenerate ? 0.0 : sample.s);

  return {state.t, sample.s, sample.w, eval.loss, dir.degenerate};
}

double momentum_error(const OptimizerState& state, const StochasticOracle& problem) {
  if (!problem.has_full_gradient()) {
    throw UnsupportedError("momentum error needs a full gradient oracle");
  }
  ParamVector e = state.m;
  e -= problem.full_loss_gradient(state.x).gradient;
  return norms(e).l2;
}

TheoryParams theory_schedule(double horizon, double p, double q) {
  if (!(p > 1.0 && p <= 2.0) || !(q > 1.0 && q <= 2.0)) {
    throw ConfigError("theory schedule needs p, q in (1, 2]");
  }
  if (!(horizon >= 1.0)) throw ConfigError("theory schedule needs T >= 1");
  const double denom = 2.0 * q * (p - 1.0) + p;
  TheoryParams out;
  out.eta = std::pow(horizon, -(q * (p - 1.0) + p) / denom);
  out.beta = std::pow(horizon, -(q * (p - 1.0)) / denom);
  out.eta = std::clamp(out.eta, std::numeric_limits<double>::min(), 1.0);
  out.beta = std::clamp(out.beta, std::numeric_limits<double>::min(), 1.0);
  return out;
}

}  // namespace ransom
