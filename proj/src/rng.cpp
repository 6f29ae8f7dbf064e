#include "ransom/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ransom/error.hpp"

namespace ransom {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngState RngState::derive(std::uint64_t key) const {
  return RngState{seed, splitmix64(stream_id ^ splitmix64(key + 0x632BE59BD9B4E019ULL))};
}

Consumer consumer_from_name(std::string_view name) {
  if (name == "step") return Consumer::Step;
  if (name == "batch") return Consumer::Batch;
  if (name == "noise") return Consumer::Noise;
  if (name == "init") return Consumer::Init;
  if (name == "lmo") return Consumer::Lmo;
  if (name == "midpoint") return Consumer::Midpoint;
  if (name == "split") return Consumer::Split;
  if (name == "data") return Consumer::Data;
  throw ConfigError("unknown rng consumer '" + std::string(name) + "'");
}

RngState split_rng(const RngState& root, Consumer consumer) {
  return root.derive(0xC0FFEE0000000000ULL | static_cast<std::uint64_t>(consumer));
}

RngState split_rng(const RngState& root, std::string_view consumer) {
  return split_rng(root, consumer_from_name(consumer));
}

Rng::Rng(const RngState& state)
    : engine_(splitmix64(state.seed) ^ splitmix64(state.stream_id ^ 0xA5A5A5A5A5A5A5A5ULL)) {}

double Rng::uniform_open_closed() {
  // 53 random mantissa bits mapped to {1, ..., 2^53} / 2^53.
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection on the top of the range keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() {
  const double u1 = uniform_open_closed();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

}  // namespace ransom
