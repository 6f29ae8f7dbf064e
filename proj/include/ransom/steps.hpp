#pragma once

#include <cstddef>
#include <functional>

#include "ransom/rng.hpp"

namespace ransom {

enum class StepKind { Exponential, Beta };

/// Randomized step-size law with mean `eta`.
///
/// Exponential: s ~ Exp(rate 1/eta), unbounded support, Stein weight w = eta.
/// Beta: s ~ Beta(1, K) with K = 1/eta - 1, support [0, 1], weight w = (1 - s)/K.
/// The weights make E[g(s) - g(0)] = E[w g'(s)] hold for any smooth g, which
/// is what turns a single HVP at the random endpoint into an unbiased
/// estimate of the gradient change along the step.
class StepDistribution {
 public:
  /// Throws ConfigError unless eta > 0 (and eta < 1 for Beta).
  StepDistribution(StepKind kind, double eta);

  static StepDistribution exponential(double eta) { return {StepKind::Exponential, eta}; }
  static StepDistribution beta(double eta) { return {StepKind::Beta, eta}; }

  StepKind kind() const { return kind_; }
  double eta() const { return eta_; }
  /// 1/eta for Exponential, 1/eta - 1 for Beta.
  double parameter() const { return param_; }

 private:
  StepKind kind_;
  double eta_;
  double param_;
};

struct StepSample {
  double s = 0.0;
  double w = 0.0;
  double eta = 0.0;
};

/// Exponential: s = -eta ln U. Beta(1,K): s = 1 - U^{1/K} (inverse survival).
/// U is drawn on (0, 1].
StepSample sample_step(const StepDistribution& dist, Rng& rng);

struct MomentReport {
  double c_s = 0.0;      ///< E[s^2] / eta^2
  double m_w = 0.0;      ///< E[(w/eta)^q]
  double m_ws = 0.0;     ///< E[((w + s)/eta)^q]
  double c_delta = 0.0;  ///< 2 * 2^{1-1/q} * max(M_w^{1/q}, M_ws^{1/q})
  double q = 2.0;
  std::size_t n_samples = 0;
};

/// Monte Carlo estimate of the distribution constants. Requires n >= 1e4 and q in (1, 2].
MomentReport estimate_moments(const StepDistribution& dist, double q, std::size_t n, Rng& rng);

struct SteinCheck {
  double lhs = 0.0;        ///< mean of g(s) - g(0)
  double rhs = 0.0;        ///< mean of w g'(s)
  double abs_err = 0.0;    ///< |lhs - rhs|
  double std_error = 0.0;  ///< standard error of the paired difference
};

using ScalarFn = std::function<double(double)>;

/// Checks E[g(s) - g(0)] = eta E[g'(s)] for s ~ Exp(1/eta), on a shared sample of n draws.
SteinCheck verify_stein_exponential(const ScalarFn& g, const ScalarFn& g_prime, double eta,
                                    std::size_t n, Rng& rng);

/// Checks E[g(s) - g(0)] = E[(1 - s)/K g'(s)] for s ~ Beta(1, K), K = 1/eta - 1.
SteinCheck verify_stein_beta(const ScalarFn& g, const ScalarFn& g_prime, double eta,
                             std::size_t n, Rng& rng);

}  // namespace ransom
