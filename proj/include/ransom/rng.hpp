#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ransom {

/// Identifies the generator algorithm. Bump when stream output changes.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64/v1";

/// A reproducible stream address. Same (seed, stream_id) always yields the
/// same draws on every platform.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Child stream keyed by an integer (step counter, sample id, ...).
  RngState derive(std::uint64_t key) const;
  bool operator==(const RngState&) const = default;
};

/// Fixed registry of stream consumers.
enum class Consumer : std::uint64_t {
  Step = 1,
  Batch = 2,
  Noise = 3,
  Init = 4,
  Lmo = 5,
  Midpoint = 6,
  Split = 7,
  Data = 8,
};

/// Throws ConfigError for names outside the registry.
Consumer consumer_from_name(std::string_view name);

RngState split_rng(const RngState& root, Consumer consumer);
RngState split_rng(const RngState& root, std::string_view consumer);

std::uint64_t splitmix64(std::uint64_t x);

/// Generator bound to one stream. Only the raw engine output is used; all
/// distributions are implemented here so results do not depend on the
/// standard library vendor.
class Rng {
 public:
  Rng() : Rng(RngState{}) {}
  explicit Rng(const RngState& state);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on (0, 1]; never returns 0.
  double uniform_open_closed();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (no caching of the second variate).
  double normal();
  /// +1 or -1 with equal probability.
  double sign();

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ransom
