#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "graspmap/errors.hpp"

namespace graspmap {

/// Dense N-dimensional array in row-major order. Image batches use the
/// N x C x H x W convention. Value semantics throughout: copying copies the
/// buffer, moving steals it, and instances are safe to hand across threads.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::int64_t n = 1;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (shape_[i] <= 0) {
        throw ShapeError(msg("tensor extent ", shape_[i], " at dimension ", i,
                             " must be positive"));
      }
      n *= shape_[i];
    }
    data_.assign(static_cast<std::size_t>(n), T(0));
  }

  static Tensor filled(std::vector<int> shape, T value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
  }

  static Tensor from_values(std::vector<int> shape, std::vector<T> values) {
    Tensor t(std::move(shape));
    if (values.size() != t.data_.size()) {
      throw ShapeError(msg("value count ", values.size(),
                           " does not match tensor size ", t.data_.size()));
    }
    t.data_ = std::move(values);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }

  int dim(int i) const {
    if (i < 0 || i >= rank()) {
      throw ShapeError(msg("dimension index ", i, " out of range for rank ", rank()));
    }
    return shape_[i];
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
  void zero() { fill(T(0)); }

  /// Flat offset of (n, c, h, w): ((n*C + c)*H + h)*W + w.
  std::int64_t index4(int n, int c, int h, int w) const {
    return ((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  std::array<int, 4> unindex4(std::int64_t flat) const {
    std::array<int, 4> out{};
    out[3] = static_cast<int>(flat % shape_[3]);
    flat /= shape_[3];
    out[2] = static_cast<int>(flat % shape_[2]);
    flat /= shape_[2];
    out[1] = static_cast<int>(flat % shape_[1]);
    out[0] = static_cast<int>(flat / shape_[1]);
    return out;
  }

  T& at4(int n, int c, int h, int w) { return data_[static_cast<std::size_t>(index4(n, c, h, w))]; }
  const T& at4(int n, int c, int h, int w) const {
    return data_[static_cast<std::size_t>(index4(n, c, h, w))];
  }

  /// Flat offset of (h, w) in a rank-2 tensor.
  std::int64_t index2(int h, int w) const {
    return static_cast<std::int64_t>(h) * shape_[1] + w;
  }
  T& at2(int h, int w) { return data_[static_cast<std::size_t>(index2(h, w))]; }
  const T& at2(int h, int w) const { return data_[static_cast<std::size_t>(index2(h, w))]; }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& t) {
  return Tensor<T>(t.shape());
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  Tensor<To> out(t.shape());
  for (std::int64_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_shape(src)) {
    throw ShapeError(msg("add_inplace: shape ", shape_string(src), " does not match ",
                         shape_string(dst)));
  }
  for (std::int64_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw ShapeError("dot: operands must share shape");
  double acc = 0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  std::string s = "[";
  for (int i = 0; i < t.rank(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape()[i]);
  }
  return s + "]";
}

/// Trainable tensor plus its gradient and Adam moment buffers.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;
  long step_count = 0;

  Parameter() = default;
  Parameter(std::string param_name, Tensor<T> initial)
      : name(std::move(param_name)),
        value(std::move(initial)),
        grad(value.shape()),
        adam_m(value.shape()),
        adam_v(value.shape()) {}

  void zero_grad() { grad.zero(); }
};

}  // namespace graspmap
