#pragma once

#include <cmath>
#include <vector>

#include "graspmap/errors.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

enum class Mode { kTrain, kEval };

/// Saved forward state needed by batchnorm2d_backward (train mode).
template <typename T>
struct BatchNormContext {
  Tensor<T> x_hat;            // normalized input, same shape as input
  std::vector<T> mean;        // per-channel batch mean
  std::vector<T> inv_std;     // per-channel 1/sqrt(var + eps)
  std::int64_t count = 0;     // N*H*W
};

/// Per-channel batch normalization over (N, H, W). Train mode normalizes with
/// batch statistics and updates the running estimates in place (running
/// variance uses the unbiased estimator); Eval mode normalizes with the
/// running estimates.
template <typename T>
Tensor<T> batchnorm2d_forward(const Tensor<T>& input, const Tensor<T>& gamma,
                              const Tensor<T>& beta, Tensor<T>& running_mean,
                              Tensor<T>& running_var, Mode mode, T momentum, T epsilon,
                              BatchNormContext<T>* ctx = nullptr) {
  if (input.rank() != 4) {
    throw ShapeError(msg("batchnorm2d: input must be rank 4, got rank ", input.rank()));
  }
  const int n_batch = input.dim(0), channels = input.dim(1);
  const int h = input.dim(2), w = input.dim(3);
  if (n_batch < 1) throw ShapeError("batchnorm2d: batch size must be >= 1");
  for (const Tensor<T>* v :
       {&gamma, &beta, static_cast<const Tensor<T>*>(&running_mean),
        static_cast<const Tensor<T>*>(&running_var)}) {
    if (v->rank() != 1 || v->dim(0) != channels) {
      throw ShapeError(msg("batchnorm2d: parameter vector length ", v->size(),
                           " does not match channel dimension ", channels));
    }
  }

  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const std::int64_t count = static_cast<std::int64_t>(n_batch) * plane;
  Tensor<T> out(input.shape());
  if (ctx) {
    ctx->x_hat = Tensor<T>(input.shape());
    ctx->mean.assign(channels, T(0));
    ctx->inv_std.assign(channels, T(0));
    ctx->count = count;
  }

  for (int c = 0; c < channels; ++c) {
    T mean, inv_std;
    if (mode == Mode::kTrain) {
      double sum = 0;
      for (int n = 0; n < n_batch; ++n) {
        const T* p = input.data() + input.index4(n, c, 0, 0);
        for (std::int64_t i = 0; i < plane; ++i) sum += static_cast<double>(p[i]);
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0;
      for (int n = 0; n < n_batch; ++n) {
        const T* p = input.data() + input.index4(n, c, 0, 0);
        for (std::int64_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      mean = static_cast<T>(mu);
      inv_std = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(epsilon)));
      const double unbiased =
          count > 1 ? sq / static_cast<double>(count - 1) : var;
      running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * static_cast<T>(mu);
      running_var[c] = (T(1) - momentum) * running_var[c] + momentum * static_cast<T>(unbiased);
    } else {
      mean = running_mean[c];
      inv_std = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(running_var[c]) + static_cast<double>(epsilon)));
    }
    if (ctx) {
      ctx->mean[c] = mean;
      ctx->inv_std[c] = inv_std;
    }
    const T g = gamma[c], b = beta[c];
    for (int n = 0; n < n_batch; ++n) {
      const T* in_p = input.data() + input.index4(n, c, 0, 0);
      T* out_p = out.data() + out.index4(n, c, 0, 0);
      T* xh_p = ctx ? ctx->x_hat.data() + ctx->x_hat.index4(n, c, 0, 0) : nullptr;
      for (std::int64_t i = 0; i < plane; ++i) {
        const T xh = (in_p[i] - mean) * inv_std;
        if (xh_p) xh_p[i] = xh;
        out_p[i] = g * xh + b;
      }
    }
  }
  return out;
}

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

/// Backward pass for train-mode batch normalization; the batch statistics are
/// treated as functions of the input.
template <typename T>
BatchNormGrads<T> batchnorm2d_backward(const Tensor<T>& grad_out,
                                       const BatchNormContext<T>& ctx,
                                       const Tensor<T>& gamma) {
  if (!grad_out.same_shape(ctx.x_hat)) {
    throw ShapeError(msg("batchnorm2d_backward: grad_out shape ", shape_string(grad_out),
                         " does not match saved activation shape ", shape_string(ctx.x_hat)));
  }
  const int n_batch = grad_out.dim(0), channels = grad_out.dim(1);
  const std::int64_t plane = static_cast<std::int64_t>(grad_out.dim(2)) * grad_out.dim(3);
  const T count = static_cast<T>(ctx.count);

  BatchNormGrads<T> grads{Tensor<T>(grad_out.shape()), Tensor<T>({channels}),
                          Tensor<T>({channels})};
  for (int c = 0; c < channels; ++c) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int n = 0; n < n_batch; ++n) {
      const T* dy = grad_out.data() + grad_out.index4(n, c, 0, 0);
      const T* xh = ctx.x_hat.data() + ctx.x_hat.index4(n, c, 0, 0);
      for (std::int64_t i = 0; i < plane; ++i) {
        sum_dy += static_cast<double>(dy[i]);
        sum_dy_xhat += static_cast<double>(dy[i]) * static_cast<double>(xh[i]);
      }
    }
    grads.beta[c] = static_cast<T>(sum_dy);
    grads.gamma[c] = static_cast<T>(sum_dy_xhat);

    // dx = (gamma*inv_std/m) * (m*dy - sum(dy) - x_hat*sum(dy*x_hat))
    const T scale = gamma[c] * ctx.inv_std[c] / count;
    const T s_dy = static_cast<T>(sum_dy);
    const T s_dyx = static_cast<T>(sum_dy_xhat);
    for (int n = 0; n < n_batch; ++n) {
      const T* dy = grad_out.data() + grad_out.index4(n, c, 0, 0);
      const T* xh = ctx.x_hat.data() + ctx.x_hat.index4(n, c, 0, 0);
      T* dx = grads.input.data() + grads.input.index4(n, c, 0, 0);
      for (std::int64_t i = 0; i < plane; ++i) {
        dx[i] = scale * (count * dy[i] - s_dy - xh[i] * s_dyx);
      }
    }
  }
  return grads;
}

}  // namespace graspmap
