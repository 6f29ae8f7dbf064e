#pragma once

#include <cstddef>
#include <vector>

#include "ransom/param_vector.hpp"
#include "ransom/rng.hpp"

namespace ransom {

enum class GeometryKind { L2Ball, LinfBall, SpectralBall, NuclearBall };

/// Norm ball defining the update geometry (or the feasible set for
/// Frank-Wolfe methods).
struct Geometry {
  GeometryKind kind = GeometryKind::L2Ball;
  double rho = 1.0;
  int ns_iters = 8;
  double power_tol = 1e-10;
  int power_max_iters = 1000;

  /// Throws ConfigError on rho <= 0, ns_iters < 1, power_tol <= 0.
  void validate() const;
};

struct LmoResult {
  ParamVector direction;
  bool degenerate = false;
  /// Power iteration hit its iteration cap before reaching tolerance.
  bool warning = false;
};

/// d = -rho m / ||m||_2 (zero and degenerate when m = 0).
LmoResult lmo_l2(const ParamVector& m, double rho);

/// d_i = -rho sign(m_i), sign(0) = 0.
LmoResult lmo_sign(const ParamVector& m, double rho);

/// Matrix blocks: -rho times the cubic Newton-Schulz polar factor of the
/// Frobenius-normalized block. Vector blocks: per-block L2 normalization.
LmoResult lmo_spectral(const ParamVector& m, double rho, int ns_iters);

/// -rho u1 w1^T from the top singular pair of the single matrix block of m.
/// The power-iteration start vector is drawn from `start`.
LmoResult lmo_nuclear(const ParamVector& m, double rho, double tol, int max_iters, Rng& start);

/// Dispatch on geometry. `start` is only consumed by the nuclear ball.
LmoResult lmo(const Geometry& geometry, const ParamVector& m, Rng& start);

/// In-place cubic Newton-Schulz: X <- 1.5 X - 0.5 X X^T X, `iters` times.
/// The caller is responsible for pre-scaling so that ||X||_2 <= 1.
void newton_schulz(MatrixView<double> x, int iters);

struct SingularPair {
  std::vector<double> left;   ///< unit, length rows
  std::vector<double> right;  ///< unit, length cols
  double sigma = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Top singular pair by power iteration on M^T M, stopping when the Rayleigh
/// quotient changes by at most tol relative.
SingularPair top_singular_pair(MatrixView<const double> m, double tol, int max_iters, Rng& start);

/// Norm whose unit ball the geometry describes, for membership checks.
/// L2: ||x||_2. Linf: max |x_i|. Spectral: max over blocks of spectral norm
/// (matrix) or L2 norm (vector). Nuclear is not provided here (needs an SVD).
double geometry_norm(const Geometry& geometry, const ParamVector& x);

/// Frank-Wolfe gap <g, x - v> with v = LMO(g) over the geometry's ball.
double frank_wolfe_gap(const Geometry& geometry, const ParamVector& gradient,
                       const ParamVector& x, Rng& start);

}  // namespace ransom
