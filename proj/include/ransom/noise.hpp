#pragma once

#include "ransom/oracle.hpp"

namespace ransom {

enum class NoiseKind { None, Gaussian, SymmetricPareto };

/// Additive oracle noise. Gradient noise has per-coordinate scale sigma_g;
/// HVP noise has per-coordinate scale sigma_h * ||d||_2 so it vanishes with d.
/// SymmetricPareto draws sigma (U^{-1/tail_index} - 1) with a random sign:
/// zero mean, finite p-th moment iff p < tail_index.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double sigma_g = 0.0;
  double sigma_h = 0.0;
  double tail_index = 3.0;
  /// true: each sample contributes its own draw and the batch averages them.
  /// false: one draw is added to the batch gradient.
  bool per_sample = true;

  /// Throws ConfigError for negative scales or tail_index <= 1.
  void validate() const;
  bool active() const { return kind != NoiseKind::None && (sigma_g > 0.0 || sigma_h > 0.0); }
};

/// One unit-scale coordinate draw of the given kind.
double unit_noise(NoiseKind kind, double tail_index, Rng& rng);

/// i.i.d. symmetrized Pareto vector with scale sigma_g over `layout`.
ParamVector inject_heavy_tail(const NoiseSpec& noise, const LayoutPtr& layout, Rng& rng);

/// Adds gradient (and, if present, HVP) noise to `eval`. Per-sample draws are
/// keyed by sample id so the same batch always sees the same noise.
void apply_noise(const NoiseSpec& noise, OracleEval& eval, const ParamVector& d, Batch batch,
                 const RngState& stream);

}  // namespace ransom
