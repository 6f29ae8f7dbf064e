#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ransom/data.hpp"
#include "ransom/noise.hpp"
#include "ransom/oracle.hpp"

namespace ransom {

// ---------------------------------------------------------------------------
// Noisy quadratic f(x) = 1/2 x^T A x - b^T x. Streaming: batches are noise keys.

class QuadraticProblem final : public StochasticOracle {
 public:
  /// `a` is row-major n x n, symmetric positive definite.
  QuadraticProblem(std::size_t n, std::vector<double> a, std::vector<double> b, NoiseSpec noise);

  /// A = Q diag(lambda) Q^T with Q random orthogonal and lambda evenly spaced
  /// in [mu, l]; b ~ N(0, I).
  static QuadraticProblem random(std::size_t n, double mu, double l, NoiseSpec noise, Rng& rng);

  const LayoutPtr& layout() const override { return layout_; }
  std::size_t dataset_size() const override { return 0; }
  LossGradient loss_gradient(const ParamVector& x, Batch batch) const override;
  ParamVector hvp(const ParamVector& x, const ParamVector& d, Batch batch) const override;
  void perturb(OracleEval& eval, const ParamVector& d, Batch batch,
               const RngState& noise_stream) const override;
  ParamVector initial_point(Rng& init) const override;
  bool has_full_gradient() const override { return true; }
  LossGradient full_loss_gradient(const ParamVector& x) const override;

  /// Loss is reported as f(x) - f(x*).
  double value(const ParamVector& x) const;
  const ParamVector& minimizer() const { return minimizer_; }
  const std::vector<double>& matrix() const { return a_; }
  const NoiseSpec& noise() const { return noise_; }
  std::size_t n() const { return n_; }
  /// x0 used by initial_point; defaults to the origin.
  void set_initial_point(ParamVector x0) { x0_ = std::move(x0); }

 private:
  ParamVector apply(const ParamVector& v) const;

  std::size_t n_;
  std::vector<double> a_;
  ParamVector b_;
  NoiseSpec noise_;
  LayoutPtr layout_;
  ParamVector minimizer_;
  double f_star_ = 0.0;
  ParamVector x0_;
};

// ---------------------------------------------------------------------------
// Welsch penalty lambda * sum w^2 / (1 + w^2): bounded, non-convex.

struct WelschTerms {
  double value = 0.0;
  std::vector<double> gradient;      ///< lambda 2w / (1 + w^2)^2
  std::vector<double> hessian_diag;  ///< lambda (2 - 6w^2) / (1 + w^2)^3
};

WelschTerms welsch_penalty(std::span<const double> weights, double lambda);

// ---------------------------------------------------------------------------
// Binary MLP classifier, tanh hidden units, linear logit, BCE + Welsch.

class MlpWelschProblem final : public StochasticOracle {
 public:
  /// `layers` = {inputs, hidden..., 1}. Labels must be +/-1.
  MlpWelschProblem(std::vector<std::size_t> layers, double lambda, DesignMatrix train,
                   DesignMatrix test, NoiseSpec noise = {});

  const LayoutPtr& layout() const override { return layout_; }
  std::size_t dataset_size() const override { return train_.rows(); }
  LossGradient loss_gradient(const ParamVector& x, Batch batch) const override;
  ParamVector hvp(const ParamVector& x, const ParamVector& d, Batch batch) const override;
  NativeHvp native_hvp() const override { return NativeHvp::ForwardOverReverse; }
  OracleEval joint(const ParamVector& x, const ParamVector& d, Batch batch) const override;
  void perturb(OracleEval& eval, const ParamVector& d, Batch batch,
               const RngState& noise_stream) const override;
  ParamVector initial_point(Rng& init) const override;
  std::optional<double> test_metric(const ParamVector& x) const override;
  std::string test_metric_name() const override { return "accuracy"; }

  double accuracy(const ParamVector& x, const DesignMatrix& data) const;
  double logit(const ParamVector& x, std::span<const double> features) const;
  double lambda() const { return lambda_; }
  /// Multiplier on the Glorot-uniform init range (default 1).
  void set_init_scale(double scale);
  double init_scale() const { return init_scale_; }
  const std::vector<std::size_t>& layers() const { return layers_; }

 private:
  /// Shared forward/backward; `d` non-null adds the forward-over-reverse pass.
  void run(const ParamVector& x, const ParamVector* d, Batch batch, double& loss,
           ParamVector& grad, ParamVector* hvp) const;

  std::vector<std::size_t> layers_;
  double lambda_;
  double init_scale_ = 1.0;
  DesignMatrix train_;
  DesignMatrix test_;
  NoiseSpec noise_;
  LayoutPtr layout_;
};

// ---------------------------------------------------------------------------
// Matrix completion: mean squared error over observed entries of a dense X.

struct RatingEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

class MatrixCompletionProblem final : public StochasticOracle {
 public:
  /// With `center`, the train mean is subtracted from every rating; losses and
  /// RMSE are unaffected by the shift.
  MatrixCompletionProblem(std::size_t rows, std::size_t cols, std::vector<RatingEntry> train,
                          std::vector<RatingEntry> test, bool center = false,
                          NoiseSpec noise = {});

  const LayoutPtr& layout() const override { return layout_; }
  std::size_t dataset_size() const override { return train_.size(); }
  LossGradient loss_gradient(const ParamVector& x, Batch batch) const override;
  ParamVector hvp(const ParamVector& x, const ParamVector& d, Batch batch) const override;
  void perturb(OracleEval& eval, const ParamVector& d, Batch batch,
               const RngState& noise_stream) const override;
  ParamVector initial_point(Rng& init) const override;
  std::optional<double> test_metric(const ParamVector& x) const override;
  std::string test_metric_name() const override { return "rmse"; }

  double rmse(const ParamVector& x, const std::vector<RatingEntry>& entries) const;
  const std::vector<RatingEntry>& train() const { return train_; }
  const std::vector<RatingEntry>& test() const { return test_; }
  double offset() const { return offset_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<RatingEntry> train_;
  std::vector<RatingEntry> test_;
  double offset_ = 0.0;
  NoiseSpec noise_;
  LayoutPtr layout_;
};

}  // namespace ransom
