#pragma once

#include <cmath>

#include "graspmap/errors.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::int64_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  return out;
}

/// Passes gradient where the saved input was strictly positive.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input) {
  if (!grad_out.same_shape(saved_input)) {
    throw ShapeError(msg("relu_backward: grad_out shape ", shape_string(grad_out),
                         " does not match saved input shape ", shape_string(saved_input)));
  }
  Tensor<T> out(grad_out.shape());
  for (std::int64_t i = 0; i < grad_out.size(); ++i) {
    out[i] = saved_input[i] > T(0) ? grad_out[i] : T(0);
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::int64_t i = 0; i < input.size(); ++i) {
    out[i] = T(1) / (T(1) + std::exp(-input[i]));
  }
  return out;
}

/// Backward through sigmoid given the saved forward output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_output) {
  Tensor<T> out(grad_out.shape());
  for (std::int64_t i = 0; i < grad_out.size(); ++i) {
    out[i] = grad_out[i] * saved_output[i] * (T(1) - saved_output[i]);
  }
  return out;
}

template <typename T>
Tensor<T> tanh_forward(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::int64_t i = 0; i < input.size(); ++i) out[i] = std::tanh(input[i]);
  return out;
}

template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_output) {
  Tensor<T> out(grad_out.shape());
  for (std::int64_t i = 0; i < grad_out.size(); ++i) {
    out[i] = grad_out[i] * (T(1) - saved_output[i] * saved_output[i]);
  }
  return out;
}

}  // namespace graspmap
