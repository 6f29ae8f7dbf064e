#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ransom/rng.hpp"

namespace ransom {

/// Dense row-major feature matrix with +/-1 labels.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  /// Throws ConfigError on a label outside {-1, +1}, a non-finite value, or a size mismatch.
  DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
               std::vector<double> labels);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cols_, cols_);
  }
  double label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& labels() const { return labels_; }

  DesignMatrix subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<double> labels_;
};

/// Per-feature affine map to zero mean / unit variance, fit on one matrix.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const DesignMatrix& m);
  DesignMatrix apply(const DesignMatrix& m) const;
};

/// Parses `label idx:val ...` lines (1-based indices). Labels 0/1 and -1/+1
/// both map to +/-1. `num_features` of 0 means "largest index seen".
/// Throws ParseError with the line number on malformed input.
DesignMatrix parse_libsvm(std::istream& in, std::size_t num_features = 0);
DesignMatrix load_libsvm(const std::string& path, std::size_t num_features = 0);

/// Canonical LibSVM text: integer-valued labels as +1/-1, ascending indices,
/// zero features omitted, values in shortest round-trip form.
std::string serialize_libsvm(const DesignMatrix& m);

struct Rating {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  std::size_t user = 0;  ///< contiguous index after selection
  std::size_t item = 0;
};

struct RatingsTable {
  std::vector<Rating> entries;
  std::vector<std::int64_t> user_ids;  ///< raw id of each contiguous user index
  std::vector<std::int64_t> item_ids;
  std::size_t n_users() const { return user_ids.size(); }
  std::size_t n_items() const { return item_ids.size(); }
};

/// Parses whitespace-separated `user item rating timestamp` lines, keeps the
/// latest timestamp per (user, item), selects the `top_users` users and
/// `top_items` items with the most ratings (ties: lower raw id first), and
/// remaps both to contiguous indices in ascending raw-id order.
RatingsTable parse_movielens(std::istream& in, std::size_t top_users = 100,
                             std::size_t top_items = 200);
RatingsTable load_movielens(const std::string& path, std::size_t top_users = 100,
                            std::size_t top_items = 200);

/// Dense low-rank matrix X = U V^T + noise with an observation mask.
struct LowRankSample {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> clean;   ///< U V^T, row-major
  std::vector<double> values;  ///< clean + noise
  std::vector<std::uint8_t> mask;
};

/// U, V entries i.i.d. N(0, 1/rank); noise N(0, noise_sigma^2); mask Bernoulli(density).
LowRankSample synth_lowrank(std::size_t rows, std::size_t cols, std::size_t rank,
                            double noise_sigma, double density, Rng& rng);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle then cut: disjoint, covering, a pure function of (n, ratio, state).
Split train_test_split(std::size_t n, double test_ratio, const RngState& state);

}  // namespace ransom
