#include "ransom/noise.hpp"

#include <cmath>

#include "ransom/error.hpp"

namespace ransom {

void NoiseSpec::validate() const {
  if (sigma_g < 0.0 || sigma_h < 0.0) throw ConfigError("noise scales must be >= 0");
  if (kind == NoiseKind::SymmetricPareto && !(tail_index > 1.0)) {
    throw ConfigError("pareto tail_index must be > 1");
  }
}

double unit_noise(NoiseKind kind, double tail_index, Rng& rng) {
  switch (kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::Gaussian:
      return rng.normal();
    case NoiseKind::SymmetricPareto: {
      const double magnitude = std::pow(rng.uniform_open_closed(), -1.0 / tail_index) - 1.0;
      return rng.sign() * magnitude;
    }
  }
  return 0.0;
}

ParamVector inject_heavy_tail(const NoiseSpec& noise, const LayoutPtr& layout, Rng& rng) {
  if (!(noise.tail_index > 1.0)) throw ConfigError("pareto tail_index must be > 1");
  ParamVector out(layout);
  for (double& v : out.values()) {
    v = noise.sigma_g * unit_noise(NoiseKind::SymmetricPareto, noise.tail_index, rng);
  }
  return out;
}

namespace {

constexpr std::uint64_t kGradientChannel = 0;
constexpr std::uint64_t kHvpChannel = 1;

void add_draw(std::span<double> out, double scale, const NoiseSpec& noise, Rng& rng) {
  for (double& v : out) v += scale * unit_noise(noise.kind, noise.tail_index, rng);
}

std::uint64_t batch_key(Batch batch) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (auto id : batch) h = splitmix64(h ^ id);
  return h;
}

}  // namespace

void apply_noise(const NoiseSpec& noise, OracleEval& eval, const ParamVector& d, Batch batch,
                 const RngState& stream) {
  if (!noise.active() || batch.empty()) return;
  const double hvp_scale = noise.sigma_h * norms(d).l2;
  const bool with_hvp = eval.hvp.has_value() && hvp_scale > 0.0;
  const RngState grad_root = stream.derive(kGradientChannel);
  const RngState hvp_root = stream.derive(kHvpChannel);

  if (noise.per_sample) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (auto id : batch) {
      if (noise.sigma_g > 0.0) {
        Rng rng(grad_root.derive(id));
        add_draw(eval.gradient.values(), noise.sigma_g * inv_b, noise, rng);
      }
      if (with_hvp) {
        Rng rng(hvp_root.derive(id));
        add_draw(eval.hvp->values(), hvp_scale * inv_b, noise, rng);
      }
    }
  } else {
    const std::uint64_t key = batch_key(batch);
    if (noise.sigma_g > 0.0) {
      Rng rng(grad_root.derive(key));
      add_draw(eval.gradient.values(), noise.sigma_g, noise, rng);
    }
    if (with_hvp) {
      Rng rng(hvp_root.derive(key));
      add_draw(eval.hvp->values(), hvp_scale, noise, rng);
    }
  }
}

}  // namespace ransom
