#include "ransom/oracle.hpp"

#include <numeric>

#include "ransom/error.hpp"

namespace ransom {

OracleEval StochasticOracle::joint(const ParamVector& x, const ParamVector& d, Batch batch) const {
  auto lg = loss_gradient(x, batch);
  OracleEval eval;
  eval.loss = lg.loss;
  eval.gradient = std::move(lg.gradient);
  eval.hvp = hvp(x, d, batch);
  eval.batch_indices.assign(batch.begin(), batch.end());
  return eval;
}

void StochasticOracle::perturb(OracleEval&, const ParamVector&, Batch, const RngState&) const {}

std::vector<std::uint64_t> StochasticOracle::sample_batch(Rng& rng, std::size_t size) const {
  std::vector<std::uint64_t> batch(size);
  const std::size_t n = dataset_size();
  for (auto& id : batch) id = n > 0 ? rng.below(n) : rng.next_u64();
  return batch;
}

LossGradient StochasticOracle::full_loss_gradient(const ParamVector& x) const {
  if (!has_full_gradient()) throw UnsupportedError("problem has no full gradient");
  const auto idx = all_indices(dataset_size());
  return loss_gradient(x, idx);
}

std::optional<double> StochasticOracle::test_metric(const ParamVector&) const {
  return std::nullopt;
}

std::vector<std::uint64_t> all_indices(std::size_t n) {
  std::vector<std::uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::uint64_t{0});
  return idx;
}

}  // namespace ransom
