#include "ransom/param_vector.hpp"

#include <algorithm>
#include <cmath>

#include "ransom/error.hpp"

namespace ransom {

Layout::Layout(std::vector<std::pair<std::string, BlockShape>> blocks) {
  blocks_.reserve(blocks.size());
  for (auto& [name, shape] : blocks) {
    if (!shape.matrix && shape.cols != 1) {
      throw LayoutError("vector block '" + name + "' must have cols == 1");
    }
    blocks_.push_back(Block{std::move(name), shape, size_});
    size_ += shape.size();
  }
}

bool Layout::has_matrix_block() const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [](const Block& b) { return b.shape.matrix; });
}

LayoutPtr make_layout(std::vector<std::pair<std::string, BlockShape>> blocks) {
  return std::make_shared<const Layout>(std::move(blocks));
}

LayoutPtr flat_layout(std::size_t n) { return make_layout({{"x", BlockShape::vector(n)}}); }

bool same_layout(const LayoutPtr& a, const LayoutPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

ParamVector::ParamVector(LayoutPtr layout)
    : layout_(std::move(layout)), data_(layout_ ? layout_->size() : 0, 0.0) {}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> data)
    : layout_(std::move(layout)), data_(std::move(data)) {
  if (!layout_ || layout_->size() != data_.size()) {
    throw LayoutError("data length does not match layout size");
  }
}

ParamVector ParamVector::flat(std::vector<double> data) {
  auto layout = flat_layout(data.size());
  return ParamVector(std::move(layout), std::move(data));
}

std::span<double> ParamVector::block(std::size_t b) {
  const Block& blk = layout_->blocks().at(b);
  return std::span<double>(data_).subspan(blk.offset, blk.shape.size());
}

std::span<const double> ParamVector::block(std::size_t b) const {
  const Block& blk = layout_->blocks().at(b);
  return std::span<const double>(data_).subspan(blk.offset, blk.shape.size());
}

MatrixView<double> ParamVector::matrix(std::size_t b) {
  const Block& blk = layout_->blocks().at(b);
  return {block(b), blk.shape.rows, blk.shape.cols};
}

MatrixView<const double> ParamVector::matrix(std::size_t b) const {
  const Block& blk = layout_->blocks().at(b);
  return {block(b), blk.shape.rows, blk.shape.cols};
}

void require_same_layout(const ParamVector& a, const ParamVector& b, const char* op) {
  if (!same_layout(a.layout(), b.layout())) {
    throw LayoutError(std::string(op) + ": layout mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + " elements)");
  }
}

ParamVector& ParamVector::operator+=(const ParamVector& o) {
  require_same_layout(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& o) {
  require_same_layout(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

ParamVector& ParamVector::axpy(double a, const ParamVector& x) {
  require_same_layout(*this, x, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
  return *this;
}

void ParamVector::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool ParamVector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::optional<std::string> ParamVector::first_non_finite_block() const {
  if (!layout_) return std::nullopt;
  for (std::size_t b = 0; b < layout_->blocks().size(); ++b) {
    for (double v : block(b)) {
      if (!std::isfinite(v)) return layout_->blocks()[b].name;
    }
  }
  return std::nullopt;
}

bool ParamVector::operator==(const ParamVector& o) const {
  return same_layout(layout_, o.layout_) && data_ == o.data_;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(double c, ParamVector a) { return a *= c; }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LayoutError("dot: length mismatch");
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double term = a[i] * b[i];
    comp += std::fma(a[i], b[i], -term);
    const double t = sum + term;
    if (std::fabs(sum) >= std::fabs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "dot");
  return dot(a.values(), b.values());
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Norms norms(const ParamVector& v) {
  Norms n;
  n.l2 = norm2(v.values());
  for (double x : v.values()) n.linf = std::max(n.linf, std::fabs(x));
  return n;
}

void require_finite(const ParamVector& v, const std::string& what) {
  if (auto blk = v.first_non_finite_block()) {
    throw NumericError(what + ": non-finite value in block '" + *blk + "'", *blk);
  }
}

}  // namespace ransom
