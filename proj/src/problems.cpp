#include "ransom/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ransom/error.hpp"

namespace ransom {

// ---------------------------------------------------------------------------
// QuadraticProblem

namespace {

// Solves A x = b for symmetric positive definite A (row-major) by Cholesky.
std::vector<double> cholesky_solve(std::size_t n, const std::vector<double>& a,
                                   const std::vector<double>& b) {
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= l[j * n + k] * l[j * n + k];
    if (!(diag > 0.0)) throw ConfigError("quadratic matrix is not positive definite");
    l[j * n + j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) acc -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = acc / l[j * n + j];
    }
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l[i * n + k] * y[k];
    y[i] = acc / l[i * n + i];
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= l[k * n + ii] * x[k];
    x[ii] = acc / l[ii * n + ii];
  }
  return x;
}

}  // namespace

QuadraticProblem::QuadraticProblem(std::size_t n, std::vector<double> a, std::vector<double> b,
                                   NoiseSpec noise)
    : n_(n), a_(std::move(a)), noise_(noise), layout_(flat_layout(n)) {
  if (a_.size() != n * n || b.size() != n) throw ConfigError("quadratic: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double scale = std::max({1.0, std::fabs(a_[i * n + j]), std::fabs(a_[j * n + i])});
      if (std::fabs(a_[i * n + j] - a_[j * n + i]) > 1e-12 * scale) {
        throw ConfigError("quadratic: matrix is not symmetric");
      }
    }
  }
  noise_.validate();
  b_ = ParamVector(layout_, std::move(b));
  minimizer_ = ParamVector(layout_, cholesky_solve(n, a_, b_.raw()));
  f_star_ = -0.5 * dot(b_, minimizer_);
  x0_ = ParamVector(layout_);
}

QuadraticProblem QuadraticProblem::random(std::size_t n, double mu, double l, NoiseSpec noise,
                                          Rng& rng) {
  if (n == 0 || !(mu > 0.0) || !(l >= mu)) throw ConfigError("quadratic: need n > 0, 0 < mu <= L");
  // Orthonormal columns by modified Gram-Schmidt, applied twice.
  std::vector<double> q(n * n);
  for (double& v : q) v = rng.normal();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q[i * n + j] * q[i * n + k];
        for (std::size_t i = 0; i < n; ++i) q[i * n + j] -= proj * q[i * n + k];
      }
      double nrm = 0.0;
      for (std::size_t i = 0; i < n; ++i) nrm += q[i * n + j] * q[i * n + j];
      nrm = std::sqrt(nrm);
      for (std::size_t i = 0; i < n; ++i) q[i * n + j] /= nrm;
    }
  }
  std::vector<double> lambda(n);
  for (std::size_t k = 0; k < n; ++k) {
    lambda[k] = n == 1 ? l : mu + (l - mu) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += q[i * n + k] * lambda[k] * q[j * n + k];
      a[i * n + j] = acc;
      a[j * n + i] = acc;
    }
  }
  std::vector<double> b(n);
  for (double& v : b) v = rng.normal();
  return QuadraticProblem(n, std::move(a), std::move(b), noise);
}

ParamVector QuadraticProblem::apply(const ParamVector& v) const {
  ParamVector out(layout_);
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) acc += a_[i * n_ + j] * v[j];
    out[i] = acc;
  }
  return out;
}

double QuadraticProblem::value(const ParamVector& x) const {
  return 0.5 * dot(x, apply(x)) - dot(b_, x) - f_star_;
}

LossGradient QuadraticProblem::loss_gradient(const ParamVector& x, Batch) const {
  require_same_layout(x, b_, "quadratic");
  ParamVector g = apply(x);
  g -= b_;
  return {value(x), std::move(g)};
}

ParamVector QuadraticProblem::hvp(const ParamVector& x, const ParamVector& d, Batch) const {
  require_same_layout(x, d, "quadratic hvp");
  return apply(d);
}

void QuadraticProblem::perturb(OracleEval& eval, const ParamVector& d, Batch batch,
                               const RngState& noise_stream) const {
  apply_noise(noise_, eval, d, batch, noise_stream);
}

ParamVector QuadraticProblem::initial_point(Rng&) const { return x0_; }

LossGradient QuadraticProblem::full_loss_gradient(const ParamVector& x) const {
  return loss_gradient(x, {});
}

// ---------------------------------------------------------------------------
// Welsch

WelschTerms welsch_penalty(std::span<const double> weights, double lambda) {
  WelschTerms t;
  t.gradient.resize(weights.size());
  t.hessian_diag.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    const double w2 = w * w;
    const double denom = 1.0 + w2;
    t.value += w2 / denom;
    t.gradient[i] = lambda * 2.0 * w / (denom * denom);
    t.hessian_diag[i] = lambda * (2.0 - 6.0 * w2) / (denom * denom * denom);
  }
  t.value *= lambda;
  return t;
}

// ---------------------------------------------------------------------------
// MlpWelschProblem

namespace {

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v))); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

MlpWelschProblem::MlpWelschProblem(std::vector<std::size_t> layers, double lambda,
                                   DesignMatrix train, DesignMatrix test, NoiseSpec noise)
    : layers_(std::move(layers)),
      lambda_(lambda),
      train_(std::move(train)),
      test_(std::move(test)),
      noise_(noise) {
  if (layers_.size() < 2 || layers_.back() != 1) {
    throw ConfigError("mlp layers must be {inputs, hidden..., 1}");
  }
  if (std::find(layers_.begin(), layers_.end(), std::size_t{0}) != layers_.end()) {
    throw ConfigError("mlp layer sizes must be positive");
  }
  if (train_.rows() > 0 && train_.cols() != layers_.front()) {
    throw ConfigError("mlp input size " + std::to_string(layers_.front()) +
                      " does not match " + std::to_string(train_.cols()) + " features");
  }
  if (lambda_ < 0.0) throw ConfigError("welsch lambda must be >= 0");
  noise_.validate();
  std::vector<std::pair<std::string, BlockShape>> blocks;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    blocks.emplace_back("W" + std::to_string(l + 1), BlockShape::mat(layers_[l + 1], layers_[l]));
    blocks.emplace_back("b" + std::to_string(l + 1), BlockShape::vector(layers_[l + 1]));
  }
  layout_ = make_layout(std::move(blocks));
}

void MlpWelschProblem::run(const ParamVector& x, const ParamVector* d, Batch batch, double& loss,
                           ParamVector& grad, ParamVector* hvp) const {
  require_same_layout(x, grad, "mlp");
  const std::size_t n_layers = layers_.size() - 1;
  const bool with_r = d != nullptr;

  std::vector<std::vector<double>> act(layers_.size());
  std::vector<std::vector<double>> r_act(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    act[l].resize(layers_[l]);
    r_act[l].assign(layers_[l], 0.0);
  }
  std::vector<double> delta;
  std::vector<double> r_delta;
  std::vector<double> next;
  std::vector<double> r_next;

  double data_loss = 0.0;
  for (auto id : batch) {
    if (id >= train_.rows()) throw ConfigError("batch index out of range");
    const auto features = train_.row(id);
    std::copy(features.begin(), features.end(), act[0].begin());
    std::fill(r_act[0].begin(), r_act[0].end(), 0.0);

    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto w = x.matrix(2 * l);
      const auto b = x.block(2 * l + 1);
      const bool hidden = l + 1 < n_layers;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        double z = b[i];
        for (std::size_t j = 0; j < w.cols(); ++j) z += w(i, j) * act[l][j];
        double rz = 0.0;
        if (with_r) {
          const auto dw = d->matrix(2 * l);
          rz = d->block(2 * l + 1)[i];
          for (std::size_t j = 0; j < w.cols(); ++j) {
            rz += dw(i, j) * act[l][j] + w(i, j) * r_act[l][j];
          }
        }
        if (hidden) {
          const double a = std::tanh(z);
          act[l + 1][i] = a;
          r_act[l + 1][i] = (1.0 - a * a) * rz;
        } else {
          act[l + 1][i] = z;
          r_act[l + 1][i] = rz;
        }
      }
    }

    const double y = train_.label(id);
    const double z_out = act[n_layers][0];
    data_loss += softplus(-y * z_out);
    delta.assign(1, -y * sigmoid(-y * z_out));
    r_delta.assign(1, with_r ? sigmoid(z_out) * sigmoid(-z_out) * r_act[n_layers][0] : 0.0);

    for (std::size_t l = n_layers; l-- > 0;) {
      auto gw = grad.matrix(2 * l);
      auto gb = grad.block(2 * l + 1);
      const auto& a_in = act[l];
      for (std::size_t i = 0; i < gw.rows(); ++i) {
        for (std::size_t j = 0; j < gw.cols(); ++j) gw(i, j) += delta[i] * a_in[j];
        gb[i] += delta[i];
      }
      if (with_r) {
        auto hw = hvp->matrix(2 * l);
        auto hb = hvp->block(2 * l + 1);
        const auto& ra_in = r_act[l];
        for (std::size_t i = 0; i < hw.rows(); ++i) {
          for (std::size_t j = 0; j < hw.cols(); ++j) {
            hw(i, j) += r_delta[i] * a_in[j] + delta[i] * ra_in[j];
          }
          hb[i] += r_delta[i];
        }
      }
      if (l == 0) break;
      const auto w = x.matrix(2 * l);
      next.assign(w.cols(), 0.0);
      r_next.assign(w.cols(), 0.0);
      for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) next[j] += w(i, j) * delta[i];
      }
      if (with_r) {
        const auto dw = d->matrix(2 * l);
        for (std::size_t i = 0; i < w.rows(); ++i) {
          for (std::size_t j = 0; j < w.cols(); ++j) {
            r_next[j] += dw(i, j) * delta[i] + w(i, j) * r_delta[i];
          }
        }
      }
      // Through tanh: a' = 1 - a^2, and R(a') = -2 a R(a).
      for (std::size_t j = 0; j < next.size(); ++j) {
        const double a = a_in[j];
        const double da = 1.0 - a * a;
        const double ga = next[j];
        next[j] = da * ga;
        if (with_r) r_next[j] = -2.0 * a * r_act[l][j] * ga + da * r_next[j];
      }
      delta.swap(next);
      r_delta.swap(r_next);
    }
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  grad *= inv_b;
  if (with_r) *hvp *= inv_b;
  const WelschTerms welsch = welsch_penalty(x.values(), lambda_);
  loss = data_loss * inv_b + welsch.value;
  auto g = grad.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += welsch.gradient[i];
  if (with_r) {
    auto h = hvp->values();
    auto dv = d->values();
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += welsch.hessian_diag[i] * dv[i];
  }
}

LossGradient MlpWelschProblem::loss_gradient(const ParamVector& x, Batch batch) const {
  if (batch.empty()) throw ConfigError("mlp: empty batch");
  LossGradient out{0.0, ParamVector(layout_)};
  run(x, nullptr, batch, out.loss, out.gradient, nullptr);
  return out;
}

OracleEval MlpWelschProblem::joint(const ParamVector& x, const ParamVector& d, Batch batch) const {
  if (batch.empty()) throw ConfigError("mlp: empty batch");
  require_same_layout(x, d, "mlp joint");
  OracleEval eval;
  eval.gradient = ParamVector(layout_);
  eval.hvp = ParamVector(layout_);
  run(x, &d, batch, eval.loss, eval.gradient, &*eval.hvp);
  eval.batch_indices.assign(batch.begin(), batch.end());
  return eval;
}

ParamVector MlpWelschProblem::hvp(const ParamVector& x, const ParamVector& d, Batch batch) const {
  return *joint(x, d, batch).hvp;
}

void MlpWelschProblem::perturb(OracleEval& eval, const ParamVector& d, Batch batch,
                               const RngState& noise_stream) const {
  apply_noise(noise_, eval, d, batch, noise_stream);
}

ParamVector MlpWelschProblem::initial_point(Rng& init) const {
  ParamVector x(layout_);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const double limit = init_scale_ * std::sqrt(6.0 / static_cast<double>(layers_[l] + layers_[l + 1]));
    for (double& w : x.block(2 * l)) w = limit * (2.0 * init.uniform() - 1.0);
  }
  return x;
}

void MlpWelschProblem::set_init_scale(double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("init scale must be >= 0");
  init_scale_ = scale;
}

double MlpWelschProblem::logit(const ParamVector& x, std::span<const double> features) const {
  std::vector<double> a(features.begin(), features.end());
  std::vector<double> next;
  const std::size_t n_layers = layers_.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto w = x.matrix(2 * l);
    const auto b = x.block(2 * l + 1);
    next.assign(w.rows(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double z = b[i];
      for (std::size_t j = 0; j < w.cols(); ++j) z += w(i, j) * a[j];
      next[i] = l + 1 < n_layers ? std::tanh(z) : z;
    }
    a.swap(next);
  }
  return a[0];
}

double MlpWelschProblem::accuracy(const ParamVector& x, const DesignMatrix& data) const {
  if (data.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double predicted = logit(x, data.row(i)) >= 0.0 ? 1.0 : -1.0;
    if (predicted == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

std::optional<double> MlpWelschProblem::test_metric(const ParamVector& x) const {
  if (test_.rows() == 0) return std::nullopt;
  return accuracy(x, test_);
}

// ---------------------------------------------------------------------------
// MatrixCompletionProblem

MatrixCompletionProblem::MatrixCompletionProblem(std::size_t rows, std::size_t cols,
                                                 std::vector<RatingEntry> train,
                                                 std::vector<RatingEntry> test, bool center,
                                                 NoiseSpec noise)
    : rows_(rows),
      cols_(cols),
      train_(std::move(train)),
      test_(std::move(test)),
      noise_(noise),
      layout_(make_layout({{"X", BlockShape::mat(rows, cols)}})) {
  noise_.validate();
  for (const auto* set : {&train_, &test_}) {
    for (const auto& e : *set) {
      if (e.row >= rows_ || e.col >= cols_) throw ConfigError("rating entry outside matrix shape");
    }
  }
  if (center && !train_.empty()) {
    double sum = 0.0;
    for (const auto& e : train_) sum += e.value;
    offset_ = sum / static_cast<double>(train_.size());
    for (auto& e : train_) e.value -= offset_;
    for (auto& e : test_) e.value -= offset_;
  }
}

LossGradient MatrixCompletionProblem::loss_gradient(const ParamVector& x, Batch batch) const {
  if (batch.empty()) throw ConfigError("matrix completion: empty batch");
  LossGradient out{0.0, ParamVector(layout_)};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto xv = x.values();
  auto g = out.gradient.values();
  for (auto id : batch) {
    if (id >= train_.size()) throw ConfigError("batch index out of range");
    const auto& e = train_[id];
    const std::size_t k = e.row * cols_ + e.col;
    const double r = xv[k] - e.value;
    out.loss += r * r;
    g[k] += 2.0 * r * inv_b;
  }
  out.loss *= inv_b;
  return out;
}

ParamVector MatrixCompletionProblem::hvp(const ParamVector& x, const ParamVector& d,
                                         Batch batch) const {
  require_same_layout(x, d, "matrix completion hvp");
  ParamVector h(layout_);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto dv = d.values();
  auto hv = h.values();
  for (auto id : batch) {
    if (id >= train_.size()) throw ConfigError("batch index out of range");
    const auto& e = train_[id];
    const std::size_t k = e.row * cols_ + e.col;
    hv[k] += 2.0 * dv[k] * inv_b;
  }
  return h;
}

void MatrixCompletionProblem::perturb(OracleEval& eval, const ParamVector& d, Batch batch,
                                      const RngState& noise_stream) const {
  apply_noise(noise_, eval, d, batch, noise_stream);
}

ParamVector MatrixCompletionProblem::initial_point(Rng&) const { return ParamVector(layout_); }

double MatrixCompletionProblem::rmse(const ParamVector& x,
                                     const std::vector<RatingEntry>& entries) const {
  if (entries.empty()) return 0.0;
  const auto xv = x.values();
  double sum = 0.0;
  for (const auto& e : entries) {
    const double r = xv[e.row * cols_ + e.col] - e.value;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(entries.size()));
}

std::optional<double> MatrixCompletionProblem::test_metric(const ParamVector& x) const {
  if (test_.empty()) return std::nullopt;
  return rmse(x, test_);
}

}  // namespace ransom
