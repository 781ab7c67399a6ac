#pragma once

#include <cmath>

#include "graspmap/errors.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

/// One Adam update with bias correction. Increments the parameter's step
/// count. Defaults are the optimizer's canonical constants.
template <typename T>
void adam_step(Parameter<T>& param, T lr, T beta1 = T(0.9), T beta2 = T(0.999),
               T epsilon = T(1e-8)) {
  if (!param.grad.all_finite()) {
    throw NumericError(msg("adam_step: non-finite gradient in parameter '", param.name, "'"));
  }
  param.step_count += 1;
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1),
                                               static_cast<double>(param.step_count)));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2),
                                               static_cast<double>(param.step_count)));
  for (std::int64_t i = 0; i < param.value.size(); ++i) {
    const T g = param.grad[i];
    param.adam_m[i] = beta1 * param.adam_m[i] + (T(1) - beta1) * g;
    param.adam_v[i] = beta2 * param.adam_v[i] + (T(1) - beta2) * g * g;
    const T m_hat = param.adam_m[i] / bc1;
    const T v_hat = param.adam_v[i] / bc2;
    param.value[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

}  // namespace graspmap
