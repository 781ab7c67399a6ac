#pragma once

#include <cstdint>

#include "graspmap/errors.hpp"
#include "graspmap/parallel.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

namespace detail {

inline int ceil_div(int x, int d) { return x >= 0 ? (x + d - 1) / d : -((-x) / d); }
inline int floor_div(int x, int d) { return x >= 0 ? x / d : -((-x + d - 1) / d); }

/// Range of indices t in [0, count) with 0 <= t*stride + offset < limit.
struct IndexRange {
  int lo, hi;
};

inline IndexRange valid_range(int offset, int stride, int limit, int count) {
  int lo = ceil_div(-offset, stride);
  int hi = floor_div(limit - 1 - offset, stride) + 1;
  if (lo < 0) lo = 0;
  if (hi > count) hi = count;
  if (hi < lo) hi = lo;
  return {lo, hi};
}

template <typename T>
void check_conv_args(const Tensor<T>& input, const Tensor<T>& weight,
                     const Tensor<T>& bias, int stride, int padding,
                     int in_channel_dim, const char* op) {
  if (input.rank() != 4) {
    throw ShapeError(msg(op, ": input must be rank 4 (NxCxHxW), got rank ", input.rank()));
  }
  if (weight.rank() != 4) {
    throw ShapeError(msg(op, ": weight must be rank 4, got rank ", weight.rank()));
  }
  if (weight.dim(2) != weight.dim(3)) {
    throw ShapeError(msg(op, ": kernel must be square, got ", weight.dim(2), "x", weight.dim(3)));
  }
  if (input.dim(1) != weight.dim(in_channel_dim)) {
    throw ShapeError(msg(op, ": input channel dimension ", input.dim(1),
                         " does not match weight channel dimension ",
                         weight.dim(in_channel_dim)));
  }
  const int out_channels = weight.dim(in_channel_dim == 0 ? 1 : 0);
  if (bias.rank() != 1 || bias.dim(0) != out_channels) {
    throw ShapeError(msg(op, ": bias length ", bias.size(),
                         " does not match output channel dimension ", out_channels));
  }
  if (stride < 1) throw ShapeError(msg(op, ": stride must be >= 1, got ", stride));
  if (padding < 0) throw ShapeError(msg(op, ": padding must be >= 0, got ", padding));
}

}  // namespace detail

/// 2-D cross-correlation. input NxCinxHxW, weight CoutxCinxkxk, bias Cout.
/// Output spatial size: floor((H + 2*padding - k)/stride) + 1.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight,
                         const Tensor<T>& bias, int stride, int padding) {
  detail::check_conv_args(input, weight, bias, stride, padding, 1, "conv2d");
  const int n_batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = weight.dim(0), k = weight.dim(2);
  const int h_out = (h + 2 * padding - k) / stride + 1;
  const int w_out = (w + 2 * padding - k) / stride + 1;
  if (h_out < 1 || w_out < 1) {
    throw ShapeError(msg("conv2d: kernel ", k, " with padding ", padding,
                         " exceeds input spatial size ", h, "x", w));
  }

  Tensor<T> out({n_batch, cout, h_out, w_out});
  parallel_for(static_cast<std::int64_t>(n_batch) * cout, [&](std::int64_t slice) {
    const int n = static_cast<int>(slice / cout);
    const int co = static_cast<int>(slice % cout);
    T* out_plane = out.data() + out.index4(n, co, 0, 0);
    const T b0 = bias[co];
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h_out) * w_out; ++i) out_plane[i] = b0;
    for (int ci = 0; ci < cin; ++ci) {
      const T* in_plane = input.data() + input.index4(n, ci, 0, 0);
      const T* w_base = weight.data() + weight.index4(co, ci, 0, 0);
      for (int a = 0; a < k; ++a) {
        const auto rows = detail::valid_range(a - padding, stride, h, h_out);
        for (int b = 0; b < k; ++b) {
          const T wv = w_base[a * k + b];
          if (wv == T(0)) continue;
          const auto cols = detail::valid_range(b - padding, stride, w, w_out);
          for (int oh = rows.lo; oh < rows.hi; ++oh) {
            const T* in_row = in_plane + static_cast<std::int64_t>(oh * stride - padding + a) * w;
            T* out_row = out_plane + static_cast<std::int64_t>(oh) * w_out;
            const int shift = b - padding;
            for (int ow = cols.lo; ow < cols.hi; ++ow) {
              out_row[ow] += wv * in_row[ow * stride + shift];
            }
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

/// Gradients of conv2d_forward with respect to input, weight and bias.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input,
                             const Tensor<T>& weight, int stride, int padding) {
  if (grad_out.rank() != 4) {
    throw ShapeError(msg("conv2d_backward: grad_out must be rank 4, got rank ", grad_out.rank()));
  }
  const int n_batch = saved_input.dim(0), cin = saved_input.dim(1);
  const int h = saved_input.dim(2), w = saved_input.dim(3);
  const int cout = weight.dim(0), k = weight.dim(2);
  const int h_out = (h + 2 * padding - k) / stride + 1;
  const int w_out = (w + 2 * padding - k) / stride + 1;
  if (grad_out.dim(0) != n_batch || grad_out.dim(1) != cout || grad_out.dim(2) != h_out ||
      grad_out.dim(3) != w_out) {
    throw ShapeError(msg("conv2d_backward: grad_out shape ", shape_string(grad_out),
                         " inconsistent with forward geometry [", n_batch, "x", cout, "x",
                         h_out, "x", w_out, "]"));
  }

  ConvGrads<T> grads{Tensor<T>(saved_input.shape()), Tensor<T>(weight.shape()),
                     Tensor<T>({cout})};

  // d/d input: scatter grad_out through the kernel, mirrored forward loops.
  parallel_for(static_cast<std::int64_t>(n_batch) * cin, [&](std::int64_t slice) {
    const int n = static_cast<int>(slice / cin);
    const int ci = static_cast<int>(slice % cin);
    T* gi_plane = grads.input.data() + grads.input.index4(n, ci, 0, 0);
    for (int co = 0; co < cout; ++co) {
      const T* go_plane = grad_out.data() + grad_out.index4(n, co, 0, 0);
      const T* w_base = weight.data() + weight.index4(co, ci, 0, 0);
      for (int a = 0; a < k; ++a) {
        const auto rows = detail::valid_range(a - padding, stride, h, h_out);
        for (int b = 0; b < k; ++b) {
          const T wv = w_base[a * k + b];
          if (wv == T(0)) continue;
          const auto cols = detail::valid_range(b - padding, stride, w, w_out);
          for (int oh = rows.lo; oh < rows.hi; ++oh) {
            T* gi_row = gi_plane + static_cast<std::int64_t>(oh * stride - padding + a) * w;
            const T* go_row = go_plane + static_cast<std::int64_t>(oh) * w_out;
            const int shift = b - padding;
            for (int ow = cols.lo; ow < cols.hi; ++ow) {
              gi_row[ow * stride + shift] += wv * go_row[ow];
            }
          }
        }
      }
    }
  });

  // d/d weight.
  parallel_for(static_cast<std::int64_t>(cout) * cin, [&](std::int64_t slice) {
    const int co = static_cast<int>(slice / cin);
    const int ci = static_cast<int>(slice % cin);
    T* gw_base = grads.weight.data() + grads.weight.index4(co, ci, 0, 0);
    for (int a = 0; a < k; ++a) {
      const auto rows = detail::valid_range(a - padding, stride, h, h_out);
      for (int b = 0; b < k; ++b) {
        const auto cols = detail::valid_range(b - padding, stride, w, w_out);
        T acc = 0;
        for (int n = 0; n < n_batch; ++n) {
          const T* go_plane = grad_out.data() + grad_out.index4(n, co, 0, 0);
          const T* in_plane = saved_input.data() + saved_input.index4(n, ci, 0, 0);
          for (int oh = rows.lo; oh < rows.hi; ++oh) {
            const T* go_row = go_plane + static_cast<std::int64_t>(oh) * w_out;
            const T* in_row = in_plane + static_cast<std::int64_t>(oh * stride - padding + a) * w;
            const int shift = b - padding;
            for (int ow = cols.lo; ow < cols.hi; ++ow) {
              acc += go_row[ow] * in_row[ow * stride + shift];
            }
          }
        }
        gw_base[a * k + b] = acc;
      }
    }
  });

  // d/d bias.
  for (int co = 0; co < cout; ++co) {
    T acc = 0;
    for (int n = 0; n < n_batch; ++n) {
      const T* go_plane = grad_out.data() + grad_out.index4(n, co, 0, 0);
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(h_out) * w_out; ++i) {
        acc += go_plane[i];
      }
    }
    grads.bias[co] = acc;
  }
  return grads;
}

/// Transposed convolution, the adjoint of conv2d_forward with the same
/// geometry. input NxCinxHxW, weight CinxCoutxkxk. Output spatial size:
/// (H - 1)*stride - 2*padding + k + output_padding, output_padding in
/// [0, stride) per axis (output_padding_w < 0 reuses output_padding_h).
template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& input, const Tensor<T>& weight,
                                   const Tensor<T>& bias, int stride, int padding,
                                   int output_padding_h = 0, int output_padding_w = -1) {
  detail::check_conv_args(input, weight, bias, stride, padding, 0, "conv_transpose2d");
  if (output_padding_w < 0) output_padding_w = output_padding_h;
  for (int op : {output_padding_h, output_padding_w}) {
    if (op < 0 || op >= stride) {
      throw ShapeError(msg("conv_transpose2d: output_padding ", op,
                           " must lie in [0, stride)"));
    }
  }
  const int n_batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = weight.dim(1), k = weight.dim(2);
  const int h_out = (h - 1) * stride - 2 * padding + k + output_padding_h;
  const int w_out = (w - 1) * stride - 2 * padding + k + output_padding_w;
  if (h_out < 1 || w_out < 1) {
    throw ShapeError(msg("conv_transpose2d: geometry yields non-positive output size ",
                         h_out, "x", w_out));
  }

  Tensor<T> out({n_batch, cout, h_out, w_out});
  parallel_for(static_cast<std::int64_t>(n_batch) * cout, [&](std::int64_t slice) {
    const int n = static_cast<int>(slice / cout);
    const int co = static_cast<int>(slice % cout);
    T* out_plane = out.data() + out.index4(n, co, 0, 0);
    const T b0 = bias[co];
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h_out) * w_out; ++i) out_plane[i] = b0;
    for (int ci = 0; ci < cin; ++ci) {
      const T* in_plane = input.data() + input.index4(n, ci, 0, 0);
      const T* w_base = weight.data() + weight.index4(ci, co, 0, 0);
      for (int a = 0; a < k; ++a) {
        const auto rows = detail::valid_range(a - padding, stride, h_out, h);
        for (int b = 0; b < k; ++b) {
          const T wv = w_base[a * k + b];
          if (wv == T(0)) continue;
          const auto cols = detail::valid_range(b - padding, stride, w_out, w);
          for (int i = rows.lo; i < rows.hi; ++i) {
            const T* in_row = in_plane + static_cast<std::int64_t>(i) * w;
            T* out_row = out_plane + static_cast<std::int64_t>(i * stride - padding + a) * w_out;
            const int shift = b - padding;
            for (int j = cols.lo; j < cols.hi; ++j) {
              out_row[j * stride + shift] += wv * in_row[j];
            }
          }
        }
      }
    }
  });
  return out;
}

/// Gradients of conv_transpose2d_forward.
template <typename T>
ConvGrads<T> conv_transpose2d_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input,
                                       const Tensor<T>& weight, int stride, int padding) {
  const int n_batch = saved_input.dim(0), cin = saved_input.dim(1);
  const int h = saved_input.dim(2), w = saved_input.dim(3);
  const int cout = weight.dim(1), k = weight.dim(2);
  const int h_out = grad_out.dim(2), w_out = grad_out.dim(3);
  if (grad_out.dim(0) != n_batch || grad_out.dim(1) != cout) {
    throw ShapeError(msg("conv_transpose2d_backward: grad_out shape ", shape_string(grad_out),
                         " inconsistent with batch ", n_batch, " and output channels ", cout));
  }

  ConvGrads<T> grads{Tensor<T>(saved_input.shape()), Tensor<T>(weight.shape()),
                     Tensor<T>({cout})};

  // d/d input: gather, same access pattern as conv2d_forward.
  parallel_for(static_cast<std::int64_t>(n_batch) * cin, [&](std::int64_t slice) {
    const int n = static_cast<int>(slice / cin);
    const int ci = static_cast<int>(slice % cin);
    T* gi_plane = grads.input.data() + grads.input.index4(n, ci, 0, 0);
    for (int co = 0; co < cout; ++co) {
      const T* go_plane = grad_out.data() + grad_out.index4(n, co, 0, 0);
      const T* w_base = weight.data() + weight.index4(ci, co, 0, 0);
      for (int a = 0; a < k; ++a) {
        const auto rows = detail::valid_range(a - padding, stride, h_out, h);
        for (int b = 0; b < k; ++b) {
          const T wv = w_base[a * k + b];
          if (wv == T(0)) continue;
          const auto cols = detail::valid_range(b - padding, stride, w_out, w);
          for (int i = rows.lo; i < rows.hi; ++i) {
            T* gi_row = gi_plane + static_cast<std::int64_t>(i) * w;
            const T* go_row =
                go_plane + static_cast<std::int64_t>(i * stride - padding + a) * w_out;
            const int shift = b - padding;
            for (int j = cols.lo; j < cols.hi; ++j) {
              gi_row[j] += wv * go_row[j * stride + shift];
            }
          }
        }
      }
    }
  });

  // d/d weight.
  parallel_for(static_cast<std::int64_t>(cin) * cout, [&](std::int64_t slice) {
    const int ci = static_cast<int>(slice / cout);
    const int co = static_cast<int>(slice % cout);
    T* gw_base = grads.weight.data() + grads.weight.index4(ci, co, 0, 0);
    for (int a = 0; a < k; ++a) {
      const auto rows = detail::valid_range(a - padding, stride, h_out, h);
      for (int b = 0; b < k; ++b) {
        const auto cols = detail::valid_range(b - padding, stride, w_out, w);
        T acc = 0;
        for (int n = 0; n < n_batch; ++n) {
          const T* in_plane = saved_input.data() + saved_input.index4(n, ci, 0, 0);
          const T* go_plane = grad_out.data() + grad_out.index4(n, co, 0, 0);
          for (int i = rows.lo; i < rows.hi; ++i) {
            const T* in_row = in_plane + static_cast<std::int64_t>(i) * w;
            const T* go_row =
                go_plane + static_cast<std::int64_t>(i * stride - padding + a) * w_out;
            const int shift = b - padding;
            for (int j = cols.lo; j < cols.hi; ++j) {
              acc += in_row[j] * go_row[j * stride + shift];
            }
          }
        }
        gw_base[a * k + b] = acc;
      }
    }
  });

  for (int co = 0; co < cout; ++co) {
    T acc = 0;
    for (int n = 0; n < n_batch; ++n) {
      const T* go_plane = grad_out.data() + grad_out.index4(n, co, 0, 0);
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(h_out) * w_out; ++i) {
        acc += go_plane[i];
      }
    }
    grads.bias[co] = acc;
  }
  return grads;
}

}  // namespace graspmap
