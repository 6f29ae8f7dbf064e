#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ransom {

/// Shape of one parameter block. Vector blocks have cols == 1 and matrix == false.
struct BlockShape {
  std::size_t rows = 0;
  std::size_t cols = 1;
  bool matrix = false;

  static BlockShape vector(std::size_t n) { return {n, 1, false}; }
  static BlockShape mat(std::size_t r, std::size_t c) { return {r, c, true}; }
  std::size_t size() const { return rows * cols; }
  bool operator==(const BlockShape&) const = default;
};

struct Block {
  std::string name;
  BlockShape shape;
  std::size_t offset = 0;
  bool operator==(const Block&) const = default;
};

/// Ordered list of named blocks over one flat buffer. Immutable; shared by pointer.
class Layout {
 public:
  explicit Layout(std::vector<std::pair<std::string, BlockShape>> blocks);

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return size_; }
  bool has_matrix_block() const;
  bool operator==(const Layout& other) const { return blocks_ == other.blocks_; }

 private:
  std::vector<Block> blocks_;
  std::size_t size_ = 0;
};

using LayoutPtr = std::shared_ptr<const Layout>;

LayoutPtr make_layout(std::vector<std::pair<std::string, BlockShape>> blocks);
/// Single vector block named "x".
LayoutPtr flat_layout(std::size_t n);
bool same_layout(const LayoutPtr& a, const LayoutPtr& b);

/// Row-major view of a matrix block.
template <typename T>
class MatrixView {
 public:
  MatrixView(std::span<T> data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}
  T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<T> data() const { return data_; }

 private:
  std::span<T> data_;
  std::size_t rows_;
  std::size_t cols_;
};

/// Flat 64-bit parameter storage with a block layout. Houses iterates,
/// momenta, directions and gradients alike.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(LayoutPtr layout);
  ParamVector(LayoutPtr layout, std::vector<double> data);

  /// Convenience: flat single-block vector.
  static ParamVector flat(std::vector<double> data);
  static ParamVector flat(std::initializer_list<double> data) {
    return flat(std::vector<double>(data));
  }
  static ParamVector zeros_like(const ParamVector& v) { return ParamVector(v.layout_); }

  const LayoutPtr& layout() const { return layout_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> block(std::size_t b);
  std::span<const double> block(std::size_t b) const;
  MatrixView<double> matrix(std::size_t b);
  MatrixView<const double> matrix(std::size_t b) const;

  ParamVector& operator+=(const ParamVector& o);
  ParamVector& operator-=(const ParamVector& o);
  ParamVector& operator*=(double c);
  /// this += a * x
  ParamVector& axpy(double a, const ParamVector& x);
  void fill(double v);

  bool all_finite() const;
  /// Name of the first block holding a NaN/Inf, if any.
  std::optional<std::string> first_non_finite_block() const;

  bool operator==(const ParamVector& o) const;

 private:
  LayoutPtr layout_;
  std::vector<double> data_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double c, ParamVector a);

/// Throws LayoutError unless a and b share a layout.
void require_same_layout(const ParamVector& a, const ParamVector& b, const char* op);

/// Euclidean inner product with compensated (Neumaier) left-to-right summation.
double dot(const ParamVector& a, const ParamVector& b);
double dot(std::span<const double> a, std::span<const double> b);

struct Norms {
  double l2 = 0.0;
  double linf = 0.0;
};
Norms norms(const ParamVector& v);
double norm2(std::span<const double> v);

/// Throws NumericError naming the first non-finite block.
void require_finite(const ParamVector& v, const std::string& what);

}  // namespace ransom
