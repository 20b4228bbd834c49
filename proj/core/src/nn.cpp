#include "fbsd/nn.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace fbsd::nn {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_conv(const Tensor2& x, const ConvParams& p) {
  require(x.channels == p.in_channels, "conv: input channel mismatch");
  require(x.data.size() == x.channels * x.features, "conv: tensor data size mismatch");
  require(p.kernel >= 1 && p.stride >= 1, "conv: kernel and stride must be >= 1");
  require(!p.depthwise || p.in_channels == p.out_channels,
          "conv: depthwise requires in_channels == out_channels");
  require(p.weight.size() == p.weight_count(), "conv: weight count does not match shape");
  require(p.bias.empty() || p.bias.size() == p.out_channels, "conv: bias size mismatch");
}

float bias_of(std::span<const float> bias, std::size_t i) {
  return bias.empty() ? 0.0f : bias[i];
}

using v4 = float __attribute__((vector_size(16)));

inline v4 load4(const float* p) {
  v4 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store4(float* p, v4 v) { std::memcpy(p, &v, sizeof(v)); }

// y[r * cols + i] += sum_c w[r * wr + c * wc] * x[c * cols + i]. Blocked as
// 4 rows x 8 columns so the accumulators stay in registers.
void accumulate_product(std::size_t rows, std::size_t cols, std::size_t depth, const float* w,
                        std::size_t wr, std::size_t wc, const float* x, float* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const float* w0 = w + r * wr;
    std::size_t i = 0;
    for (; i + 8 <= cols; i += 8) {
      v4 a0 = {}, a1 = {}, b0 = {}, b1 = {}, c0 = {}, c1 = {}, d0 = {}, d1 = {};
      for (std::size_t c = 0; c < depth; ++c) {
        const v4 x0 = load4(x + c * cols + i);
        const v4 x1 = load4(x + c * cols + i + 4);
        const float* wc0 = w0 + c * wc;
        const float wa = wc0[0], wb = wc0[wr], wcv = wc0[2 * wr], wd = wc0[3 * wr];
        a0 += wa * x0; a1 += wa * x1;
        b0 += wb * x0; b1 += wb * x1;
        c0 += wcv * x0; c1 += wcv * x1;
        d0 += wd * x0; d1 += wd * x1;
      }
      float* y0 = y + r * cols + i;
      store4(y0, load4(y0) + a0);
      store4(y0 + 4, load4(y0 + 4) + a1);
      store4(y0 + cols, load4(y0 + cols) + b0);
      store4(y0 + cols + 4, load4(y0 + cols + 4) + b1);
      store4(y0 + 2 * cols, load4(y0 + 2 * cols) + c0);
      store4(y0 + 2 * cols + 4, load4(y0 + 2 * cols + 4) + c1);
      store4(y0 + 3 * cols, load4(y0 + 3 * cols) + d0);
      store4(y0 + 3 * cols + 4, load4(y0 + 3 * cols + 4) + d1);
    }
    for (; i + 4 <= cols; i += 4) {
      v4 a0 = {}, b0 = {}, c0 = {}, d0 = {};
      for (std::size_t c = 0; c < depth; ++c) {
        const v4 x0 = load4(x + c * cols + i);
        const float* wc0 = w0 + c * wc;
        a0 += wc0[0] * x0;
        b0 += wc0[wr] * x0;
        c0 += wc0[2 * wr] * x0;
        d0 += wc0[3 * wr] * x0;
      }
      float* y0 = y + r * cols + i;
      store4(y0, load4(y0) + a0);
      store4(y0 + cols, load4(y0 + cols) + b0);
      store4(y0 + 2 * cols, load4(y0 + 2 * cols) + c0);
      store4(y0 + 3 * cols, load4(y0 + 3 * cols) + d0);
    }
    for (; i < cols; ++i) {
      float acc[4] = {};
      for (std::size_t c = 0; c < depth; ++c) {
        const float xv = x[c * cols + i];
        const float* wc0 = w0 + c * wc;
        for (std::size_t k = 0; k < 4; ++k) acc[k] += wc0[k * wr] * xv;
      }
      for (std::size_t k = 0; k < 4; ++k) y[(r + k) * cols + i] += acc[k];
    }
  }
  for (; r < rows; ++r) {
    const float* wrow = w + r * wr;
    float* yr = y + r * cols;
    for (std::size_t c = 0; c < depth; ++c) {
      const float wv = wrow[c * wc];
      const float* xc = x + c * cols;
      for (std::size_t i = 0; i < cols; ++i) yr[i] += wv * xc[i];
    }
  }
}

}  // namespace

Padding same_padding(std::size_t kernel, std::size_t stride) {
  const std::size_t total = kernel >= stride ? kernel - stride : 0;
  return Padding{total - total / 2, total / 2};
}

void hard_swish_inplace(std::span<float> x) {
  for (float& v : x) v = hard_swish(v);
}

void sigmoid_inplace(std::span<float> x) {
  for (float& v : x) v = sigmoid(v);
}

void affine(std::span<const float> x, const LinearParams& p, std::span<float> y) {
  require(x.size() == p.in_features, "affine: input size mismatch");
  require(y.size() == p.out_features, "affine: output size mismatch");
  require(p.weight.size() == p.in_features * p.out_features, "affine: weight size mismatch");
  require(p.bias.empty() || p.bias.size() == p.out_features, "affine: bias size mismatch");
  const float* w = p.weight.data();
  for (std::size_t o = 0; o < p.out_features; ++o) {
    const float* row = w + o * p.in_features;
    float acc = 0.0f;
    for (std::size_t i = 0; i < p.in_features; ++i) acc += row[i] * x[i];
    y[o] = acc + bias_of(p.bias, o);
  }
}

std::vector<float> affine(std::span<const float> x, const LinearParams& p) {
  std::vector<float> y(p.out_features);
  affine(x, p, y);
  return y;
}

std::size_t conv1d_output_features(std::size_t in_features, const ConvParams& p) {
  const std::size_t padded = in_features + p.pad_left + p.pad_right;
  require(padded >= p.kernel, "conv1d: input shorter than kernel after padding");
  return (padded - p.kernel) / p.stride + 1;
}

std::size_t conv_transpose1d_output_features(std::size_t in_features, const ConvParams& p) {
  require(in_features >= 1, "conv_transpose1d: empty input");
  const std::size_t full = (in_features - 1) * p.stride + p.kernel;
  require(full > p.pad_left + p.pad_right, "conv_transpose1d: padding exceeds output");
  return full - p.pad_left - p.pad_right;
}

Tensor2 conv1d(const Tensor2& x, const ConvParams& p) {
  require(!p.transposed, "conv1d: params are transposed");
  check_conv(x, p);
  const std::size_t in_f = x.features;
  const std::size_t out_f = conv1d_output_features(in_f, p);
  const std::size_t k_len = p.kernel;
  const std::size_t stride = p.stride;
  const auto pad = static_cast<std::ptrdiff_t>(p.pad_left);

  Tensor2 y(p.out_channels, out_f);
  for (std::size_t co = 0; co < p.out_channels; ++co) {
    float* out = y.data.data() + co * out_f;
    std::fill(out, out + out_f, bias_of(p.bias, co));
  }

  // Output o reads input o * stride + k - pad_left for tap k; [lo, hi) is the
  // range of outputs for which that index is inside the input.
  auto tap_range = [&](std::size_t k, std::size_t& lo, std::size_t& hi) {
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const std::ptrdiff_t first = off >= 0 ? 0 : (-off + s - 1) / s;
    const std::ptrdiff_t last_index = static_cast<std::ptrdiff_t>(in_f) - 1 - off;
    const std::ptrdiff_t end = last_index < 0 ? 0 : last_index / s + 1;
    lo = static_cast<std::size_t>(first);
    hi = std::max(lo, std::min(out_f, static_cast<std::size_t>(end)));
  };

  if (p.depthwise) {
    for (std::size_t c = 0; c < p.out_channels; ++c) {
      const float* in = x.data.data() + c * in_f;
      float* out = y.data.data() + c * out_f;
      for (std::size_t k = 0; k < k_len; ++k) {
        const float w = p.weight[c * k_len + k];
        std::size_t lo = 0, hi = 0;
        tap_range(k, lo, hi);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
        for (std::size_t o = lo; o < hi; ++o) {
          out[o] += w * in[static_cast<std::ptrdiff_t>(o * stride) + off];
        }
      }
    }
    return y;
  }

  if (k_len == 1 && stride == 1 && p.pad_left == 0 && p.pad_right == 0) {
    // Pointwise: a plain (out x in) * (in x F) product.
    accumulate_product(p.out_channels, out_f, p.in_channels, p.weight.data(), p.in_channels, 1,
                       x.data.data(), y.data.data());
    return y;
  }

  for (std::size_t co = 0; co < p.out_channels; ++co) {
    float* out = y.data.data() + co * out_f;
    for (std::size_t ci = 0; ci < p.in_channels; ++ci) {
      const float* in = x.data.data() + ci * in_f;
      const float* wk = p.weight.data() + (co * p.in_channels + ci) * k_len;
      for (std::size_t k = 0; k < k_len; ++k) {
        const float w = wk[k];
        std::size_t lo = 0, hi = 0;
        tap_range(k, lo, hi);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
        for (std::size_t o = lo; o < hi; ++o) {
          out[o] += w * in[static_cast<std::ptrdiff_t>(o * stride) + off];
        }
      }
    }
  }
  return y;
}

Tensor2 conv_transpose1d(const Tensor2& x, const ConvParams& p) {
  require(p.transposed, "conv_transpose1d: params are not transposed");
  require(!p.depthwise, "conv_transpose1d: depthwise transposed convolution unsupported");
  check_conv(x, p);
  const std::size_t in_f = x.features;
  const std::size_t out_f = conv_transpose1d_output_features(in_f, p);
  const std::size_t k_len = p.kernel;
  const std::size_t stride = p.stride;
  const auto pad = static_cast<std::ptrdiff_t>(p.pad_left);

  Tensor2 y(p.out_channels, out_f);
  for (std::size_t co = 0; co < p.out_channels; ++co) {
    float* out = y.data.data() + co * out_f;
    std::fill(out, out + out_f, bias_of(p.bias, co));
  }

  // Input position i scatters into output i * stride + k - pad_left. The
  // channel sums for every (co, k) row come from one product, then scatter.
  const std::size_t rows = p.out_channels * k_len;
  std::vector<float> z(rows * in_f, 0.0f);
  accumulate_product(rows, in_f, p.in_channels, p.weight.data(), 1, p.out_channels * k_len,
                     x.data.data(), z.data());
  const auto s = static_cast<std::ptrdiff_t>(stride);
  for (std::size_t co = 0; co < p.out_channels; ++co) {
    float* out = y.data.data() + co * out_f;
    for (std::size_t k = 0; k < k_len; ++k) {
      const float* a = z.data() + (co * k_len + k) * in_f;
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
      const std::ptrdiff_t first = off >= 0 ? 0 : (-off + s - 1) / s;
      std::ptrdiff_t last = static_cast<std::ptrdiff_t>(out_f) - 1 - off;
      if (last < 0) continue;
      last = std::min<std::ptrdiff_t>(last / s, static_cast<std::ptrdiff_t>(in_f) - 1);
      for (std::ptrdiff_t i = first; i <= last; ++i) out[i * s + off] += a[i];
    }
  }
  return y;
}

Tensor3 conv2d(const Tensor3& x, const Conv2dParams& p) {
  require(x.channels == p.in_channels, "conv2d: input channel mismatch");
  require(x.data.size() == x.channels * x.time * x.features, "conv2d: tensor data size mismatch");
  require(x.time >= p.kernel_time, "conv2d: time extent shorter than kernel");
  require(p.weight.size() == p.out_channels * p.in_channels * p.kernel_time * p.kernel_freq,
          "conv2d: weight count does not match shape");
  require(p.bias.empty() || p.bias.size() == p.out_channels, "conv2d: bias size mismatch");
  const std::size_t padded = x.features + p.pad_freq_left + p.pad_freq_right;
  require(padded >= p.kernel_freq, "conv2d: frequency extent shorter than kernel");

  const std::size_t out_t = x.time - p.kernel_time + 1;
  const std::size_t out_f = padded - p.kernel_freq + 1;
  const auto pad = static_cast<std::ptrdiff_t>(p.pad_freq_left);
  const auto in_f = static_cast<std::ptrdiff_t>(x.features);

  Tensor3 y(p.out_channels, out_t, out_f);
  for (std::size_t co = 0; co < p.out_channels; ++co) {
    for (std::size_t t = 0; t < out_t; ++t) {
      float* out = &y.at(co, t, 0);
      std::fill(out, out + out_f, bias_of(p.bias, co));
      for (std::size_t ci = 0; ci < p.in_channels; ++ci) {
        for (std::size_t kt = 0; kt < p.kernel_time; ++kt) {
          const float* in = x.data.data() + (ci * x.time + t + kt) * x.features;
          const float* wk =
              p.weight.data() + ((co * p.in_channels + ci) * p.kernel_time + kt) * p.kernel_freq;
          for (std::size_t kf = 0; kf < p.kernel_freq; ++kf) {
            const float w = wk[kf];
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kf) - pad;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
            const std::ptrdiff_t hi =
                std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out_f), in_f - off);
            for (std::ptrdiff_t f = lo; f < hi; ++f) out[f] += w * in[f + off];
          }
        }
      }
    }
  }
  return y;
}

void causal_instance_norm_inplace(std::span<float> x, const NormParams& p) {
  require(p.gamma.size() == 1 && p.beta.size() == 1,
          "causal_instance_norm: single-vector form takes one gamma/beta");
  require(!x.empty(), "causal_instance_norm: empty input");
  double sum = 0.0;
  for (float v : x) sum += v;
  const double mean = sum / static_cast<double>(x.size());
  double sq = 0.0;
  for (float v : x) sq += (v - mean) * (v - mean);
  const double var = sq / static_cast<double>(x.size());
  const double scale = p.gamma[0] / std::sqrt(var + p.eps);
  const double shift = p.beta[0];
  for (float& v : x) v = static_cast<float>((v - mean) * scale + shift);
}

void causal_instance_norm_inplace(Tensor2& x, const NormParams& p) {
  require(p.gamma.size() == x.channels && p.beta.size() == x.channels,
          "causal_instance_norm: gamma/beta must have one entry per channel");
  for (std::size_t c = 0; c < x.channels; ++c) {
    NormParams per{p.gamma.subspan(c, 1), p.beta.subspan(c, 1), p.eps};
    causal_instance_norm_inplace(x.row(c), per);
  }
}

Tensor2 causal_instance_norm(const Tensor2& x, const NormParams& p) {
  Tensor2 y = x;
  causal_instance_norm_inplace(y, p);
  return y;
}

void gru_step(std::span<const float> x, const GruParams& p, GruState& state) {
  const std::size_t h_len = p.hidden_size;
  require(x.size() == p.input_size, "gru_step: input size mismatch");
  require(state.hidden.size() == h_len, "gru_step: hidden size mismatch");
  require(p.weight_ih.size() == 3 * h_len * p.input_size, "gru_step: weight_ih size mismatch");
  require(p.weight_hh.size() == 3 * h_len * h_len, "gru_step: weight_hh size mismatch");
  require(p.bias_ih.size() == 3 * h_len && p.bias_hh.size() == 3 * h_len,
          "gru_step: bias size mismatch");

  std::vector<float> gi(3 * h_len);
  std::vector<float> gh(3 * h_len);
  affine(x, LinearParams{p.input_size, 3 * h_len, p.weight_ih, p.bias_ih}, gi);
  affine(state.hidden, LinearParams{h_len, 3 * h_len, p.weight_hh, p.bias_hh}, gh);

  std::vector<float> next(h_len);
  for (std::size_t j = 0; j < h_len; ++j) {
    const float r = sigmoid(gi[j] + gh[j]);
    const float z = sigmoid(gi[h_len + j] + gh[h_len + j]);
    const float n = std::tanh(gi[2 * h_len + j] + r * gh[2 * h_len + j]);
    next[j] = (1.0f - z) * n + z * state.hidden[j];
  }
  state.hidden = std::move(next);
}

}  // namespace fbsd::nn
