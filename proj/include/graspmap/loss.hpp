#pragma once

#include <array>

#include "graspmap/errors.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

/// Per-head weights of the training loss. The angle weight multiplies both
/// the cos and sin plane residuals.
struct LossWeights {
  double lambda_q = 5.0;
  double lambda_phi = 3.0;
  double lambda_w = 4.0;
};

template <typename T>
struct WeightedMseResult {
  T loss = 0;
  Tensor<T> grad_q, grad_cos, grad_sin, grad_w;
};

/// Weighted mean squared error over the four prediction planes:
///   (1/2n) * [lq*sum((q^-q)^2) + lphi*sum((c^-c)^2) + lphi*sum((s^-s)^2)
///             + lw*sum((w^-w)^2)]
/// with n the batch size and sums running over every pixel of every example.
/// Gradients are the exact analytic derivatives with respect to each plane.
template <typename T>
WeightedMseResult<T> weighted_mse_loss(const Tensor<T>& pred_q, const Tensor<T>& pred_cos,
                                       const Tensor<T>& pred_sin, const Tensor<T>& pred_w,
                                       const Tensor<T>& target_q, const Tensor<T>& target_cos,
                                       const Tensor<T>& target_sin, const Tensor<T>& target_w,
                                       const LossWeights& weights = {}) {
  const std::array<const Tensor<T>*, 8> all = {&pred_q,   &pred_cos,   &pred_sin,   &pred_w,
                                               &target_q, &target_cos, &target_sin, &target_w};
  for (const Tensor<T>* t : all) {
    if (!t->same_shape(pred_q)) {
      throw ShapeError(msg("weighted_mse_loss: plane shape ", shape_string(*t),
                           " does not match ", shape_string(pred_q)));
    }
  }
  if (pred_q.rank() != 4 || pred_q.dim(1) != 1) {
    throw ShapeError(msg("weighted_mse_loss: planes must be Nx1xHxW, got ",
                         shape_string(pred_q)));
  }

  const int n = pred_q.dim(0);
  const double inv_2n = 1.0 / (2.0 * n);
  const double inv_n = 1.0 / n;

  WeightedMseResult<T> r;
  r.grad_q = Tensor<T>(pred_q.shape());
  r.grad_cos = Tensor<T>(pred_q.shape());
  r.grad_sin = Tensor<T>(pred_q.shape());
  r.grad_w = Tensor<T>(pred_q.shape());

  const std::array<std::pair<const Tensor<T>*, const Tensor<T>*>, 4> pairs = {
      std::pair{&pred_q, &target_q}, std::pair{&pred_cos, &target_cos},
      std::pair{&pred_sin, &target_sin}, std::pair{&pred_w, &target_w}};
  const std::array<double, 4> lambdas = {weights.lambda_q, weights.lambda_phi,
                                         weights.lambda_phi, weights.lambda_w};
  const std::array<Tensor<T>*, 4> grads = {&r.grad_q, &r.grad_cos, &r.grad_sin, &r.grad_w};

  double loss = 0;
  for (int head = 0; head < 4; ++head) {
    const Tensor<T>& p = *pairs[head].first;
    const Tensor<T>& t = *pairs[head].second;
    Tensor<T>& g = *grads[head];
    const double lambda = lambdas[head];
    double sq = 0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double res = static_cast<double>(p[i]) - static_cast<double>(t[i]);
      sq += res * res;
      g[i] = static_cast<T>(lambda * res * inv_n);
    }
    loss += lambda * sq;
  }
  r.loss = static_cast<T>(loss * inv_2n);
  return r;
}

}  // namespace graspmap
