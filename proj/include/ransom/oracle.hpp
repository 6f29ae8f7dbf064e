#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ransom/param_vector.hpp"
#include "ransom/rng.hpp"

namespace ransom {

/// Sample identifiers of one minibatch. For finite-sum problems these are
/// row indices in [0, dataset_size); for streaming problems they are opaque
/// 64-bit keys that seed per-sample noise.
using Batch = std::span<const std::uint64_t>;

/// Result of one stochastic query at a point: g_{t+1}, h_{t+1} and the batch loss.
struct OracleEval {
  ParamVector gradient;
  std::optional<ParamVector> hvp;
  double loss = 0.0;
  std::vector<std::uint64_t> batch_indices;
};

struct LossGradient {
  double loss = 0.0;
  ParamVector gradient;
};

/// Which exact Hessian-vector product a problem implements natively.
enum class NativeHvp { Analytic, ForwardOverReverse };

/// Interface implemented by every objective. Evaluations are deterministic in
/// (x, d, batch, noise stream) and safe to call concurrently.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual const LayoutPtr& layout() const = 0;
  std::size_t dimension() const { return layout()->size(); }
  /// Number of training samples; 0 for streaming problems.
  virtual std::size_t dataset_size() const = 0;

  /// Noise-free batch loss and gradient.
  virtual LossGradient loss_gradient(const ParamVector& x, Batch batch) const = 0;
  /// Noise-free batch Hessian-vector product, computed exactly.
  virtual ParamVector hvp(const ParamVector& x, const ParamVector& d, Batch batch) const = 0;
  virtual NativeHvp native_hvp() const { return NativeHvp::Analytic; }

  /// Fused gradient + HVP on one batch. Problems with a shared forward pass override.
  virtual OracleEval joint(const ParamVector& x, const ParamVector& d, Batch batch) const;

  /// Adds the problem's stochastic noise model to a clean evaluation. `d` is the
  /// direction the HVP was taken along (noise along it scales with its norm).
  virtual void perturb(OracleEval& eval, const ParamVector& d, Batch batch,
                       const RngState& noise_stream) const;

  /// Draws a minibatch of `size` sample ids.
  virtual std::vector<std::uint64_t> sample_batch(Rng& rng, std::size_t size) const;

  /// Starting iterate.
  virtual ParamVector initial_point(Rng& init) const = 0;

  virtual bool has_full_gradient() const { return dataset_size() > 0; }
  /// Exact objective and gradient (noise-free, whole training set).
  virtual LossGradient full_loss_gradient(const ParamVector& x) const;

  /// Held-out metric (accuracy, RMSE, ...) if the problem has one.
  virtual std::optional<double> test_metric(const ParamVector& x) const;
  virtual std::string test_metric_name() const { return ""; }
};

/// Row indices 0..n-1.
std::vector<std::uint64_t> all_indices(std::size_t n);

}  // namespace ransom
