#include "ransom/lmo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ransom/error.hpp"

namespace ransom {

void Geometry::validate() const {
  if (!(rho > 0.0)) throw ConfigError("geometry radius must be > 0");
  if (ns_iters < 1) throw ConfigError("ns_iters must be >= 1");
  if (!(power_tol > 0.0)) throw ConfigError("power iteration tolerance must be > 0");
  if (power_max_iters < 1) throw ConfigError("power iteration cap must be >= 1");
}

namespace {

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void normalize_block(std::span<const double> in, std::span<double> out, double rho) {
  const double n = norm2(in);
  if (n == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double scale = -rho / n;
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = scale * in[i];
}

void normalize(std::vector<double>& v) {
  const double n = norm2(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

// y = M x
void mat_vec(MatrixView<const double> m, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
}

// y = M^T x
void mat_t_vec(MatrixView<const double> m, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += m(i, j) * xi;
  }
}

}  // namespace

LmoResult lmo_l2(const ParamVector& m, double rho) {
  LmoResult r{ParamVector::zeros_like(m), all_zero(m.values()), false};
  if (!r.degenerate) normalize_block(m.values(), r.direction.values(), rho);
  return r;
}

LmoResult lmo_sign(const ParamVector& m, double rho) {
  LmoResult r{ParamVector::zeros_like(m), all_zero(m.values()), false};
  auto in = m.values();
  auto out = r.direction.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] > 0.0 ? -rho : (in[i] < 0.0 ? rho : 0.0);
  }
  return r;
}

void newton_schulz(MatrixView<double> x, int iters) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const bool wide = rows <= cols;
  const std::size_t k = wide ? rows : cols;
  std::vector<double> gram(k * k);
  std::vector<double> next(rows * cols);
  for (int it = 0; it < iters; ++it) {
    // Gram matrix on the short side: X X^T (wide) or X^T X (tall).
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a; b < k; ++b) {
        double acc = 0.0;
        if (wide) {
          for (std::size_t j = 0; j < cols; ++j) acc += x(a, j) * x(b, j);
        } else {
          for (std::size_t i = 0; i < rows; ++i) acc += x(i, a) * x(i, b);
        }
        gram[a * k + b] = acc;
        gram[b * k + a] = acc;
      }
    }
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        double acc = 0.0;
        if (wide) {
          for (std::size_t l = 0; l < k; ++l) acc += gram[i * k + l] * x(l, j);
        } else {
          for (std::size_t l = 0; l < k; ++l) acc += x(i, l) * gram[l * k + j];
        }
        next[i * cols + j] = 1.5 * x(i, j) - 0.5 * acc;
      }
    }
    std::copy(next.begin(), next.end(), x.data().begin());
  }
}

LmoResult lmo_spectral(const ParamVector& m, double rho, int ns_iters) {
  if (ns_iters < 1) throw ConfigError("ns_iters must be >= 1");
  if (!m.layout()->has_matrix_block()) {
    throw ConfigError("spectral LMO needs at least one matrix block");
  }
  LmoResult r{ParamVector::zeros_like(m), all_zero(m.values()), false};
  const auto& blocks = m.layout()->blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto in = m.block(b);
    auto out = r.direction.block(b);
    if (!blocks[b].shape.matrix) {
      normalize_block(in, out, rho);
      continue;
    }
    const double fro = norm2(in);
    if (fro == 0.0) continue;
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / fro;
    newton_schulz(r.direction.matrix(b), ns_iters);
    for (double& v : out) v *= -rho;
  }
  return r;
}

SingularPair top_singular_pair(MatrixView<const double> m, double tol, int max_iters, Rng& start) {
  SingularPair p;
  p.right.resize(m.cols());
  p.left.resize(m.rows());
  for (double& v : p.right) v = start.normal();
  normalize(p.right);
  std::vector<double> next(m.cols());
  double rayleigh = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    mat_vec(m, p.right, p.left);
    const double current = dot(p.left, p.left);
    mat_t_vec(m, p.left, next);
    p.iterations = it;
    if (current == 0.0) break;
    const bool done = it > 1 && std::fabs(current - rayleigh) <= tol * current;
    rayleigh = current;
    if (done) {
      p.converged = true;
      break;
    }
    p.right = next;
    normalize(p.right);
  }
  // Recompute the left vector from the final right vector.
  mat_vec(m, p.right, p.left);
  p.sigma = norm2(p.left);
  normalize(p.left);
  return p;
}

LmoResult lmo_nuclear(const ParamVector& m, double rho, double tol, int max_iters, Rng& start) {
  const auto& blocks = m.layout()->blocks();
  if (blocks.size() != 1 || !blocks[0].shape.matrix) {
    throw ConfigError("nuclear LMO needs a single matrix block");
  }
  LmoResult r{ParamVector::zeros_like(m), all_zero(m.values()), false};
  if (r.degenerate) return r;
  const SingularPair p = top_singular_pair(m.matrix(0), tol, max_iters, start);
  r.warning = !p.converged;
  auto out = r.direction.matrix(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = -rho * p.left[i] * p.right[j];
  }
  return r;
}

LmoResult lmo(const Geometry& geometry, const ParamVector& m, Rng& start) {
  switch (geometry.kind) {
    case GeometryKind::L2Ball:
      return lmo_l2(m, geometry.rho);
    case GeometryKind::LinfBall:
      return lmo_sign(m, geometry.rho);
    case GeometryKind::SpectralBall:
      return lmo_spectral(m, geometry.rho, geometry.ns_iters);
    case GeometryKind::NuclearBall:
      return lmo_nuclear(m, geometry.rho, geometry.power_tol, geometry.power_max_iters, start);
  }
  throw ConfigError("unknown geometry");
}

double geometry_norm(const Geometry& geometry, const ParamVector& x) {
  switch (geometry.kind) {
    case GeometryKind::L2Ball:
      return norms(x).l2;
    case GeometryKind::LinfBall:
      return norms(x).linf;
    case GeometryKind::SpectralBall: {
      double worst = 0.0;
      const auto& blocks = x.layout()->blocks();
      Rng start(RngState{0x5bec7a1, 0});
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const double n = blocks[b].shape.matrix
                             ? top_singular_pair(x.matrix(b), 1e-14, 10000, start).sigma
                             : norm2(x.block(b));
        worst = std::max(worst, n);
      }
      return worst;
    }
    case GeometryKind::NuclearBall:
      throw UnsupportedError("nuclear norm needs an SVD; not provided by the library");
  }
  throw ConfigError("unknown geometry");
}

double frank_wolfe_gap(const Geometry& geometry, const ParamVector& gradient,
                       const ParamVector& x, Rng& start) {
  const LmoResult v = lmo(geometry, gradient, start);
  return dot(gradient, x) - dot(gradient, v.direction);
}

}  // namespace ransom
