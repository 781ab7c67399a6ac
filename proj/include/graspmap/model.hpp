#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "graspmap/activations.hpp"
#include "graspmap/batchnorm.hpp"
#include "graspmap/conv.hpp"
#include "graspmap/errors.hpp"
#include "graspmap/rng.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

enum class LayerKind { kConv, kConvTranspose, kBatchNorm, kRelu, kAdd };

/// Declarative description of one layer; build() validates these before
/// allocating parameters.
struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int kernel_size = 1;
  int stride = 1;
  int in_channels = 0;
  int out_channels = 0;
  int padding = 0;
};

/// Encoder-decoder grasp network description. The decoder mirrors the
/// encoder: its strides are the reversed encoder strides and its channel
/// plan walks the encoder channels backwards, so the output spatial size
/// equals the input size.
struct GraspFCNConfig {
  int input_size = 400;
  std::array<int, 6> down_kernels{9, 5, 3, 3, 3, 3};
  std::array<int, 6> up_kernels{3, 3, 3, 5, 9, 5};
  std::array<int, 6> down_channels{16, 32, 64, 128, 128, 128};
  std::array<int, 6> down_strides{2, 2, 2, 1, 1, 1};
  int skip_kernel = 3;
  int out_channels = 4;  // q, cos(2phi), sin(2phi), w

  /// Full-scale preset for 400 x 400 Cornell-format inputs.
  static GraspFCNConfig cornell() { return GraspFCNConfig{}; }

  /// Small preset for 96 x 96 synthetic verification runs on a CPU.
  static GraspFCNConfig desk() {
    GraspFCNConfig c;
    c.input_size = 96;
    c.down_channels = {8, 16, 16, 32, 32, 32};
    return c;
  }

  /// Minimal preset for finite-difference gradient checks.
  static GraspFCNConfig tiny() {
    GraspFCNConfig c;
    c.input_size = 16;
    c.down_channels = {2, 2, 2, 2, 2, 2};
    return c;
  }

  std::array<int, 6> up_strides() const {
    std::array<int, 6> s{};
    for (int i = 0; i < 6; ++i) s[static_cast<std::size_t>(i)] = down_strides[static_cast<std::size_t>(5 - i)];
    return s;
  }

  /// Decoder output channels: encoder channels walked backwards.
  std::array<int, 6> up_channels() const {
    std::array<int, 6> m{};
    for (int j = 0; j < 5; ++j) m[static_cast<std::size_t>(j)] = down_channels[static_cast<std::size_t>(4 - j)];
    m[5] = down_channels[0];
    return m;
  }

  void validate() const {
    if (input_size < 8) throw ConfigError(msg("config: input_size ", input_size, " too small"));
    for (int i = 0; i < 6; ++i) {
      const int dk = down_kernels[static_cast<std::size_t>(i)];
      const int uk = up_kernels[static_cast<std::size_t>(i)];
      if (dk < 1 || dk % 2 == 0) {
        throw ConfigError(msg("config: down kernel ", dk, " at layer ", i, " must be odd"));
      }
      if (uk < 1 || uk % 2 == 0) {
        throw ConfigError(msg("config: up kernel ", uk, " at layer ", i, " must be odd"));
      }
      if (down_channels[static_cast<std::size_t>(i)] < 1) {
        throw ConfigError(msg("config: channel count at layer ", i, " must be positive"));
      }
      if (down_strides[static_cast<std::size_t>(i)] < 1) {
        throw ConfigError(msg("config: stride at layer ", i, " must be >= 1"));
      }
    }
    if (skip_kernel < 1 || skip_kernel % 2 == 0) {
      throw ConfigError(msg("config: skip kernel ", skip_kernel, " must be odd"));
    }
    if (out_channels != 4) {
      throw ConfigError(msg("config: out_channels must be 4, got ", out_channels));
    }
  }
};

namespace detail {

template <typename T>
struct Conv2dLayer {
  Parameter<T> weight, bias;
  int stride = 1, padding = 0;
  Tensor<T> saved_input;

  Tensor<T> forward(const Tensor<T>& x, bool save) {
    if (save) saved_input = x;
    return conv2d_forward(x, weight.value, bias.value, stride, padding);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    auto g = conv2d_backward(grad_out, saved_input, weight.value, stride, padding);
    add_inplace(weight.grad, g.weight);
    add_inplace(bias.grad, g.bias);
    return std::move(g.input);
  }
};

template <typename T>
struct ConvTranspose2dLayer {
  Parameter<T> weight, bias;
  int stride = 1, padding = 0, output_padding = 0;
  Tensor<T> saved_input;

  Tensor<T> forward(const Tensor<T>& x, bool save) {
    if (save) saved_input = x;
    return conv_transpose2d_forward(x, weight.value, bias.value, stride, padding,
                                    output_padding);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    auto g = conv_transpose2d_backward(grad_out, saved_input, weight.value, stride, padding);
    add_inplace(weight.grad, g.weight);
    add_inplace(bias.grad, g.bias);
    return std::move(g.input);
  }
};

template <typename T>
struct BatchNorm2dLayer {
  Parameter<T> gamma, beta;
  Tensor<T> running_mean, running_var;
  T momentum = T(0.1);
  T epsilon = T(1e-5);
  BatchNormContext<T> ctx;

  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool save) {
    return batchnorm2d_forward(x, gamma.value, beta.value, running_mean, running_var, mode,
                               momentum, epsilon, save ? &ctx : nullptr);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    auto g = batchnorm2d_backward(grad_out, ctx, gamma.value);
    add_inplace(gamma.grad, g.gamma);
    add_inplace(beta.grad, g.beta);
    return std::move(g.input);
  }
};

template <typename T>
struct ReluLayer {
  Tensor<T> saved_input;
  Tensor<T> forward(const Tensor<T>& x, bool save) {
    if (save) saved_input = x;
    return relu_forward(x);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) { return relu_backward(grad_out, saved_input); }
};

template <typename T>
struct ConvBnReluBlock {
  Conv2dLayer<T> conv;
  BatchNorm2dLayer<T> bn;
  ReluLayer<T> relu;

  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool save) {
    return relu.forward(bn.forward(conv.forward(x, save), mode, save), save);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    return conv.backward(bn.backward(relu.backward(grad_out)));
  }
};

template <typename T>
struct DeconvBnReluBlock {
  ConvTranspose2dLayer<T> deconv;
  BatchNorm2dLayer<T> bn;
  ReluLayer<T> relu;

  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool save) {
    return relu.forward(bn.forward(deconv.forward(x, save), mode, save), save);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) {
    return deconv.backward(bn.backward(relu.backward(grad_out)));
  }
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t state = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state ^= p[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

}  // namespace detail

inline constexpr std::array<char, 8> kModelMagic = {'G', 'R', 'A', 'S', 'P', 'F', 'C', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Encoder-decoder FCN over one depth channel, emitting four per-pixel
/// planes: grasp quality, cos(2phi), sin(2phi) and normalized width. Skip
/// paths project each encoder activation through a 3x3 convolution and add
/// it into the matching-resolution decoder activation. Training forward
/// saves activations; one instance supports one forward/backward at a time.
template <typename T>
class GraspFCN {
 public:
  struct Output {
    Tensor<T> q, cos, sin, w;  // each N x 1 x S x S
  };

  static GraspFCN build(const GraspFCNConfig& config, std::uint64_t seed) {
    config.validate();
    GraspFCN net;
    net.config_ = config;
    Rng rng = make_rng(seed);

    const auto up_strides = config.up_strides();
    const auto up_channels = config.up_channels();

    // Encoder spatial sizes; res[i] is the activation size after block i.
    std::array<int, 6> res{};
    int size = config.input_size;
    for (int i = 0; i < 6; ++i) {
      const int k = config.down_kernels[static_cast<std::size_t>(i)];
      const int s = config.down_strides[static_cast<std::size_t>(i)];
      const int p = (k - 1) / 2;
      size = (size + 2 * p - k) / s + 1;
      if (size < 1) {
        throw ConfigError(msg("config: encoder layer ", i, " collapses spatial size to ", size));
      }
      res[static_cast<std::size_t>(i)] = size;
    }

    int in_ch = 1;
    for (int i = 0; i < 6; ++i) {
      const int k = config.down_kernels[static_cast<std::size_t>(i)];
      const int out_ch = config.down_channels[static_cast<std::size_t>(i)];
      net.encoder_[static_cast<std::size_t>(i)] = net.make_conv_block(
          msg("enc", i), in_ch, out_ch, k, config.down_strides[static_cast<std::size_t>(i)], rng);
      in_ch = out_ch;
    }

    int cur = res[5];
    for (int j = 0; j < 6; ++j) {
      const int k = config.up_kernels[static_cast<std::size_t>(j)];
      const int s = up_strides[static_cast<std::size_t>(j)];
      const int p = (k - 1) / 2;
      const int target = j < 5 ? res[static_cast<std::size_t>(4 - j)] : config.input_size;
      const int base = (cur - 1) * s - 2 * p + k;
      const int out_pad = target - base;
      if (out_pad < 0 || out_pad >= s) {
        throw ConfigError(msg("config: decoder layer ", j, " cannot reach size ", target,
                              " from ", cur, " (stride mirror violation)"));
      }
      const int out_ch = up_channels[static_cast<std::size_t>(j)];
      net.decoder_[static_cast<std::size_t>(j)] =
          net.make_deconv_block(msg("dec", j), in_ch, out_ch, k, s, out_pad, rng);
      in_ch = out_ch;
      cur = target;
    }

    for (int i = 0; i < 5; ++i) {
      const int src_ch = config.down_channels[static_cast<std::size_t>(i)];
      const int dst_ch = up_channels[static_cast<std::size_t>(4 - i)];
      net.skips_[static_cast<std::size_t>(i)] = net.make_conv(
          msg("skip", i), src_ch, dst_ch, config.skip_kernel, 1, rng);
    }
    net.final_ = net.make_conv("head", up_channels[5], config.out_channels, 3, 1, rng);
    return net;
  }

  const GraspFCNConfig& config() const { return config_; }

  /// Forward pass. Train mode saves activations for backward and updates
  /// batch-norm running statistics; Eval mode is a pure function of the
  /// weights and input.
  Output forward(const Tensor<T>& batch, Mode mode) {
    if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != config_.input_size ||
        batch.dim(3) != config_.input_size) {
      throw ShapeError(msg("forward: expected Nx1x", config_.input_size, "x",
                           config_.input_size, " input, got ", shape_string(batch)));
    }
    if (!batch.all_finite()) throw NumericError("forward: input contains non-finite values");
    const bool save = mode == Mode::kTrain;
    saved_ready_ = save;

    std::array<Tensor<T>, 6> enc_act;
    Tensor<T> x = batch;
    for (int i = 0; i < 6; ++i) {
      x = encoder_[static_cast<std::size_t>(i)].forward(x, mode, save);
      enc_act[static_cast<std::size_t>(i)] = x;
    }
    for (int j = 0; j < 6; ++j) {
      x = decoder_[static_cast<std::size_t>(j)].forward(x, mode, save);
      if (j < 5) {
        const int i = 4 - j;
        add_inplace(x, skips_[static_cast<std::size_t>(i)].forward(
                           enc_act[static_cast<std::size_t>(i)], save));
      }
    }
    Tensor<T> logits = final_.forward(x, save);

    Output out;
    out.q = sigmoid_forward(slice_channel(logits, 0));
    out.cos = tanh_forward(slice_channel(logits, 1));
    out.sin = tanh_forward(slice_channel(logits, 2));
    out.w = sigmoid_forward(slice_channel(logits, 3));
    if (save) head_outputs_ = out;
    return out;
  }

  /// Reverse pass over the recorded layer DAG; accumulates into parameter
  /// gradients. Requires a preceding Train-mode forward.
  void backward(const Tensor<T>& grad_q, const Tensor<T>& grad_cos, const Tensor<T>& grad_sin,
                const Tensor<T>& grad_w) {
    if (!saved_ready_) {
      throw Error("backward: no saved activations; run a Train-mode forward first");
    }
    Tensor<T> g_logits(
        {grad_q.dim(0), config_.out_channels, grad_q.dim(2), grad_q.dim(3)});
    write_channel(g_logits, 0, sigmoid_backward(grad_q, head_outputs_.q));
    write_channel(g_logits, 1, tanh_backward(grad_cos, head_outputs_.cos));
    write_channel(g_logits, 2, tanh_backward(grad_sin, head_outputs_.sin));
    write_channel(g_logits, 3, sigmoid_backward(grad_w, head_outputs_.w));

    Tensor<T> g = final_.backward(g_logits);
    std::array<Tensor<T>, 6> enc_grad;
    for (int j = 5; j >= 0; --j) {
      if (j < 5) {
        const int i = 4 - j;
        Tensor<T> skip_g = skips_[static_cast<std::size_t>(i)].backward(g);
        if (enc_grad[static_cast<std::size_t>(i)].empty()) {
          enc_grad[static_cast<std::size_t>(i)] = std::move(skip_g);
        } else {
          add_inplace(enc_grad[static_cast<std::size_t>(i)], skip_g);
        }
      }
      g = decoder_[static_cast<std::size_t>(j)].backward(g);
    }
    if (enc_grad[5].empty()) {
      enc_grad[5] = std::move(g);
    } else {
      add_inplace(enc_grad[5], g);
    }
    for (int i = 5; i >= 0; --i) {
      Tensor<T> gi = encoder_[static_cast<std::size_t>(i)].backward(
          enc_grad[static_cast<std::size_t>(i)]);
      if (i > 0) {
        if (enc_grad[static_cast<std::size_t>(i - 1)].empty()) {
          enc_grad[static_cast<std::size_t>(i - 1)] = std::move(gi);
        } else {
          add_inplace(enc_grad[static_cast<std::size_t>(i - 1)], gi);
        }
      }
    }
    saved_ready_ = false;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& b : encoder_) {
      out.push_back(&b.conv.weight);
      out.push_back(&b.conv.bias);
      out.push_back(&b.bn.gamma);
      out.push_back(&b.bn.beta);
    }
    for (auto& b : decoder_) {
      out.push_back(&b.deconv.weight);
      out.push_back(&b.deconv.bias);
      out.push_back(&b.bn.gamma);
      out.push_back(&b.bn.beta);
    }
    for (auto& s : skips_) {
      out.push_back(&s.weight);
      out.push_back(&s.bias);
    }
    out.push_back(&final_.weight);
    out.push_back(&final_.bias);
    return out;
  }

  /// Batch-norm running statistics, serialized alongside the parameters.
  std::vector<Tensor<T>*> buffers() {
    std::vector<Tensor<T>*> out;
    for (auto& b : encoder_) {
      out.push_back(&b.bn.running_mean);
      out.push_back(&b.bn.running_var);
    }
    for (auto& b : decoder_) {
      out.push_back(&b.bn.running_mean);
      out.push_back(&b.bn.running_var);
    }
    return out;
  }

  void zero_grad() {
    for (Parameter<T>* p : parameters()) p->zero_grad();
  }

  std::int64_t parameter_count() {
    std::int64_t n = 0;
    for (Parameter<T>* p : parameters()) n += p->value.size();
    return n;
  }

  void save(std::ostream& os) {
    std::ostringstream body;
    body.write(kModelMagic.data(), kModelMagic.size());
    write_u32(body, kModelVersion);
    const std::string cfg = config_text();
    write_u32(body, static_cast<std::uint32_t>(cfg.size()));
    body.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    for (Parameter<T>* p : parameters()) write_f32_array(body, p->value);
    for (Tensor<T>* b : buffers()) write_f32_array(body, *b);
    const std::string payload = body.str();
    const std::uint64_t checksum = detail::fnv1a64(payload.data(), payload.size());
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    write_u64(os, checksum);
    if (!os) throw IoError("save: stream write failed");
  }

  static GraspFCN load(std::istream& is) {
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < kModelMagic.size() + 12 + 8) {
      throw IoError("load: stream too short to hold a model");
    }
    const std::size_t payload_size = bytes.size() - 8;
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + payload_size, 8);
    const std::uint64_t computed = detail::fnv1a64(bytes.data(), payload_size);
    if (stored != computed) {
      throw IoError(msg("load: checksum mismatch (stored ", stored, ", computed ", computed,
                        "); stream is corrupt or truncated"));
    }

    std::size_t pos = 0;
    if (std::memcmp(bytes.data(), kModelMagic.data(), kModelMagic.size()) != 0) {
      throw IoError("load: bad magic; not a model stream");
    }
    pos += kModelMagic.size();
    const std::uint32_t version = read_u32(bytes, pos);
    if (version != kModelVersion) {
      throw IoError(msg("load: unsupported model version ", version, " (expected ",
                        kModelVersion, ")"));
    }
    const std::uint32_t cfg_len = read_u32(bytes, pos);
    if (pos + cfg_len > payload_size) throw IoError("load: config block overruns stream");
    const std::string cfg_text = bytes.substr(pos, cfg_len);
    pos += cfg_len;

    GraspFCN net = build(parse_config_text(cfg_text), 0);
    for (Parameter<T>* p : net.parameters()) read_f32_array(bytes, pos, payload_size, p->value);
    for (Tensor<T>* b : net.buffers()) read_f32_array(bytes, pos, payload_size, *b);
    if (pos != payload_size) throw IoError("load: trailing bytes after parameters");
    return net;
  }

 private:
  GraspFCNConfig config_;
  std::array<detail::ConvBnReluBlock<T>, 6> encoder_;
  std::array<detail::DeconvBnReluBlock<T>, 6> decoder_;
  std::array<detail::Conv2dLayer<T>, 5> skips_;
  detail::Conv2dLayer<T> final_;
  Output head_outputs_;
  bool saved_ready_ = false;

  detail::Conv2dLayer<T> make_conv(const std::string& name, int in_ch, int out_ch, int k,
                                   int stride, Rng& rng) {
    detail::Conv2dLayer<T> layer;
    layer.stride = stride;
    layer.padding = (k - 1) / 2;
    Tensor<T> w({out_ch, in_ch, k, k});
    he_init(w, in_ch * k * k, rng);
    layer.weight = Parameter<T>(name + ".weight", std::move(w));
    layer.bias = Parameter<T>(name + ".bias", Tensor<T>({out_ch}));
    return layer;
  }

  detail::ConvBnReluBlock<T> make_conv_block(const std::string& name, int in_ch, int out_ch,
                                             int k, int stride, Rng& rng) {
    detail::ConvBnReluBlock<T> block;
    block.conv = make_conv(name + ".conv", in_ch, out_ch, k, stride, rng);
    init_bn(block.bn, name, out_ch);
    return block;
  }

  detail::DeconvBnReluBlock<T> make_deconv_block(const std::string& name, int in_ch, int out_ch,
                                                 int k, int stride, int out_pad, Rng& rng) {
    detail::DeconvBnReluBlock<T> block;
    block.deconv.stride = stride;
    block.deconv.padding = (k - 1) / 2;
    block.deconv.output_padding = out_pad;
    Tensor<T> w({in_ch, out_ch, k, k});
    he_init(w, in_ch * k * k, rng);
    block.deconv.weight = Parameter<T>(name + ".deconv.weight", std::move(w));
    block.deconv.bias = Parameter<T>(name + ".deconv.bias", Tensor<T>({out_ch}));
    init_bn(block.bn, name, out_ch);
    return block;
  }

  void init_bn(detail::BatchNorm2dLayer<T>& bn, const std::string& name, int channels) {
    bn.gamma = Parameter<T>(name + ".bn.gamma", Tensor<T>::filled({channels}, T(1)));
    bn.beta = Parameter<T>(name + ".bn.beta", Tensor<T>({channels}));
    bn.running_mean = Tensor<T>({channels});
    bn.running_var = Tensor<T>::filled({channels}, T(1));
  }

  static void he_init(Tensor<T>& w, int fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::int64_t i = 0; i < w.size(); ++i) {
      w[i] = static_cast<T>(normal_double(rng, 0.0, stddev));
    }
  }

  static Tensor<T> slice_channel(const Tensor<T>& t, int c) {
    Tensor<T> out({t.dim(0), 1, t.dim(2), t.dim(3)});
    const std::int64_t plane = static_cast<std::int64_t>(t.dim(2)) * t.dim(3);
    for (int n = 0; n < t.dim(0); ++n) {
      const T* src = t.data() + t.index4(n, c, 0, 0);
      T* dst = out.data() + out.index4(n, 0, 0, 0);
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i];
    }
    return out;
  }

  static void write_channel(Tensor<T>& t, int c, const Tensor<T>& plane) {
    const std::int64_t count = static_cast<std::int64_t>(t.dim(2)) * t.dim(3);
    for (int n = 0; n < t.dim(0); ++n) {
      T* dst = t.data() + t.index4(n, c, 0, 0);
      const T* src = plane.data() + plane.index4(n, 0, 0, 0);
      for (std::int64_t i = 0; i < count; ++i) dst[i] = src[i];
    }
  }

  std::string config_text() const {
    std::ostringstream os;
    os << "input_size=" << config_.input_size << "\n";
    auto list = [&os](const char* key, const std::array<int, 6>& v) {
      os << key << "=";
      for (int i = 0; i < 6; ++i) os << (i ? "," : "") << v[static_cast<std::size_t>(i)];
      os << "\n";
    };
    list("down_kernels", config_.down_kernels);
    list("up_kernels", config_.up_kernels);
    list("down_channels", config_.down_channels);
    list("down_strides", config_.down_strides);
    os << "skip_kernel=" << config_.skip_kernel << "\n";
    os << "out_channels=" << config_.out_channels << "\n";
    return os.str();
  }

  static GraspFCNConfig parse_config_text(const std::string& text) {
    GraspFCNConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      auto parse_list = [&value](std::array<int, 6>& out) {
        std::istringstream vs(value);
        std::string item;
        for (int i = 0; i < 6; ++i) {
          if (!std::getline(vs, item, ',')) throw IoError("load: malformed config list");
          out[static_cast<std::size_t>(i)] = std::atoi(item.c_str());
        }
      };
      if (key == "input_size") cfg.input_size = std::atoi(value.c_str());
      else if (key == "down_kernels") parse_list(cfg.down_kernels);
      else if (key == "up_kernels") parse_list(cfg.up_kernels);
      else if (key == "down_channels") parse_list(cfg.down_channels);
      else if (key == "down_strides") parse_list(cfg.down_strides);
      else if (key == "skip_kernel") cfg.skip_kernel = std::atoi(value.c_str());
      else if (key == "out_channels") cfg.out_channels = std::atoi(value.c_str());
      else throw IoError(msg("load: unknown config key '", key, "'"));
    }
    return cfg;
  }

  static void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
  }
  static void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
  }
  static std::uint32_t read_u32(const std::string& bytes, std::size_t& pos) {
    std::uint32_t v = 0;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }

  void write_f32_array(std::ostream& os, const Tensor<T>& t) {
    const std::uint64_t count = static_cast<std::uint64_t>(t.size());
    write_u64(os, count);
    std::vector<float> buf(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < t.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(t[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }

  static void read_f32_array(const std::string& bytes, std::size_t& pos, std::size_t limit,
                             Tensor<T>& dst) {
    if (pos + 8 > limit) throw IoError("load: parameter header overruns stream");
    std::uint64_t count = 0;
    std::memcpy(&count, bytes.data() + pos, 8);
    pos += 8;
    if (count != static_cast<std::uint64_t>(dst.size())) {
      throw IoError(msg("load: parameter element count ", count, " does not match expected ",
                        dst.size()));
    }
    if (pos + count * sizeof(float) > limit) throw IoError("load: parameter data overruns stream");
    for (std::uint64_t i = 0; i < count; ++i) {
      float v = 0;
      std::memcpy(&v, bytes.data() + pos, sizeof(float));
      pos += sizeof(float);
      dst[static_cast<std::int64_t>(i)] = static_cast<T>(v);
    }
  }
};

}  // namespace graspmap
