#pragma once

// Shared helpers for the test suites: finite differences, random tensors and
// small reference implementations used as independent oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "graspmap/rng.hpp"
#include "graspmap/tensor.hpp"

namespace testutil {

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

/// Central finite difference of a scalar function at one coordinate.
inline double central_diff(const std::function<double()>& f, double& x, double eps = 1e-4) {
  const double orig = x;
  x = orig + eps;
  const double hi = f();
  x = orig - eps;
  const double lo = f();
  x = orig;
  return (hi - lo) / (2 * eps);
}

template <typename T>
graspmap::Tensor<T> random_tensor(std::vector<int> shape, graspmap::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
  graspmap::Tensor<T> t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<T>(graspmap::uniform_double(rng, lo, hi));
  }
  return t;
}

/// Reference cross-correlation: a direct quadruple loop with explicit zero
/// padding, independent of the library's range bookkeeping.
template <typename T>
graspmap::Tensor<T> naive_conv2d(const graspmap::Tensor<T>& input,
                                 const graspmap::Tensor<T>& weight,
                                 const graspmap::Tensor<T>& bias, int stride, int padding) {
  const int n_batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = weight.dim(0), k = weight.dim(2);
  const int h_out = (h + 2 * padding - k) / stride + 1;
  const int w_out = (w + 2 * padding - k) / stride + 1;
  graspmap::Tensor<T> out({n_batch, cout, h_out, w_out});
  for (int n = 0; n < n_batch; ++n) {
    for (int co = 0; co < cout; ++co) {
      for (int oh = 0; oh < h_out; ++oh) {
        for (int ow = 0; ow < w_out; ++ow) {
          double acc = static_cast<double>(bias[co]);
          for (int ci = 0; ci < cin; ++ci) {
            for (int a = 0; a < k; ++a) {
              for (int b = 0; b < k; ++b) {
                const int ih = oh * stride - padding + a;
                const int iw = ow * stride - padding + b;
                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                acc += static_cast<double>(input.at4(n, ci, ih, iw)) *
                       static_cast<double>(weight.at4(co, ci, a, b));
              }
            }
          }
          out.at4(n, co, oh, ow) = static_cast<T>(acc);
        }
      }
    }
  }
  return out;
}

}  // namespace testutil
