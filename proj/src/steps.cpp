#include "ransom/steps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ransom/error.hpp"

namespace ransom {

StepDistribution::StepDistribution(StepKind kind, double eta) : kind_(kind), eta_(eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("step distribution needs eta > 0, got " + std::to_string(eta));
  }
  if (kind == StepKind::Beta) {
    if (!(eta < 1.0)) {
      throw ConfigError("beta steps need 0 < eta < 1, got " + std::to_string(eta));
    }
    param_ = 1.0 / eta - 1.0;
  } else {
    param_ = 1.0 / eta;
  }
}

StepSample sample_step(const StepDistribution& dist, Rng& rng) {
  const double u = rng.uniform_open_closed();
  StepSample out;
  out.eta = dist.eta();
  if (dist.kind() == StepKind::Exponential) {
    out.s = -dist.eta() * std::log(u);
    out.w = dist.eta();
  } else {
    const double k = dist.parameter();
    out.s = 1.0 - std::pow(u, 1.0 / k);
    out.w = (1.0 - out.s) / k;
  }
  return out;
}

MomentReport estimate_moments(const StepDistribution& dist, double q, std::size_t n, Rng& rng) {
  if (n < 10000) throw ConfigError("estimate_moments needs n >= 10^4");
  if (!(q > 1.0 && q <= 2.0)) throw ConfigError("estimate_moments needs q in (1, 2]");
  const double eta = dist.eta();
  double sum_s2 = 0.0;
  double sum_w = 0.0;
  double sum_ws = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const StepSample smp = sample_step(dist, rng);
    sum_s2 += smp.s * smp.s;
    sum_w += std::pow(std::fabs(smp.w / eta), q);
    sum_ws += std::pow(std::fabs((smp.w + smp.s) / eta), q);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  MomentReport r;
  r.q = q;
  r.n_samples = n;
  r.c_s = sum_s2 * inv_n / (eta * eta);
  r.m_w = sum_w * inv_n;
  r.m_ws = sum_ws * inv_n;
  r.c_delta = 2.0 * std::pow(2.0, 1.0 - 1.0 / q) *
              std::max(std::pow(r.m_w, 1.0 / q), std::pow(r.m_ws, 1.0 / q));
  return r;
}

namespace {

SteinCheck run_check(const StepDistribution& dist, const ScalarFn& g, const ScalarFn& g_prime,
                     std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("stein check needs n >= 2");
  const double g0 = g(0.0);
  double sum_l = 0.0;
  double sum_r = 0.0;
  // Welford on the paired difference for the standard error.
  double mean_d = 0.0;
  double m2_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const StepSample smp = sample_step(dist, rng);
    const double l = g(smp.s) - g0;
    const double r = smp.w * g_prime(smp.s);
    sum_l += l;
    sum_r += r;
    const double diff = l - r;
    const double delta = diff - mean_d;
    mean_d += delta / static_cast<double>(i + 1);
    m2_d += delta * (diff - mean_d);
  }
  SteinCheck c;
  c.lhs = sum_l / static_cast<double>(n);
  c.rhs = sum_r / static_cast<double>(n);
  c.abs_err = std::fabs(c.lhs - c.rhs);
  c.std_error = std::sqrt(m2_d / static_cast<double>(n - 1) / static_cast<double>(n));
  return c;
}

}  // namespace

SteinCheck verify_stein_exponential(const ScalarFn& g, const ScalarFn& g_prime, double eta,
                                    std::size_t n, Rng& rng) {
  return run_check(StepDistribution::exponential(eta), g, g_prime, n, rng);
}

SteinCheck verify_stein_beta(const ScalarFn& g, const ScalarFn& g_prime, double eta,
                             std::size_t n, Rng& rng) {
  return run_check(StepDistribution::beta(eta), g, g_prime, n, rng);
}

}  // namespace ransom
