#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gaborwave/errors.hpp"

namespace gaborwave {

/// Complex scalar. std::complex<double> is layout-compatible with a (re, im) pair.
using Complex = std::complex<double>;

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major array of complex values with an optional gradient slot of
/// the same shape.
///
/// Gradients follow the real-pair convention: grad[k].real() holds dL/d re(x[k])
/// and grad[k].imag() holds dL/d im(x[k]).
class ComplexTensor {
 public:
  ComplexTensor() = default;

  explicit ComplexTensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_)) {
    check_extents();
  }

  ComplexTensor(Shape shape, std::vector<Complex> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_numel(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                           shape_string(shape_));
    }
  }

  static ComplexTensor scalar(Complex v) { return ComplexTensor({1}, {v}); }

  static ComplexTensor from_real(Shape shape, std::span<const double> values) {
    std::vector<Complex> data(values.begin(), values.end());
    return ComplexTensor(std::move(shape), std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }

  bool has_grad() const { return grad_.has_value(); }

  /// Allocates a zero gradient slot if none exists.
  std::span<Complex> ensure_grad() {
    if (!grad_) grad_.emplace(data_.size());
    return *grad_;
  }
  std::span<const Complex> grad() const {
    if (!grad_) throw ContractError("tensor has no gradient slot");
    return *grad_;
  }
  void clear_grad() { grad_.reset(); }

  std::vector<double> real_part() const {
    std::vector<double> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = data_[i].real();
    return out;
  }

  ComplexTensor reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return ComplexTensor(std::move(shape), data_);
  }

 private:
  void check_extents() const {
    for (auto e : shape_) {
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape_));
    }
  }

  Shape shape_;
  std::vector<Complex> data_;
  std::optional<std::vector<Complex>> grad_;
};

inline void require_same_shape(const ComplexTensor& a, const ComplexTensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

}  // namespace gaborwave
