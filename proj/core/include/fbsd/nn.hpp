#pragma once

// Minimal inference kernels for the denoiser: affine layers, 1D/2D
// convolutions (pointwise, depthwise, strided, transposed), causal instance
// norm, a single-layer GRU cell and the two pointwise nonlinearities.
//
// Weight layouts follow the common deep-learning conventions so that trained
// weights transfer without reshuffling:
//   affine            weight[out][in]
//   conv1d            weight[out][in / groups][kernel]
//   conv_transpose1d  weight[in][out][kernel]
//   conv2d            weight[out][in][kernel_time][kernel_freq]
//   gru               weight_ih[3 * hidden][input], weight_hh[3 * hidden][hidden],
//                     gate rows ordered (reset, update, candidate)
// All convolutions are cross-correlations (no kernel flip).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fbsd::nn {

/// channels x features, row-major.
struct Tensor2 {
  std::size_t channels = 0;
  std::size_t features = 0;
  std::vector<float> data;

  Tensor2() = default;
  Tensor2(std::size_t c, std::size_t f, float fill = 0.0f)
      : channels(c), features(f), data(c * f, fill) {}

  float& at(std::size_t c, std::size_t f) { return data[c * features + f]; }
  float at(std::size_t c, std::size_t f) const { return data[c * features + f]; }
  std::span<float> row(std::size_t c) { return {data.data() + c * features, features}; }
  std::span<const float> row(std::size_t c) const {
    return {data.data() + c * features, features};
  }
};

/// channels x time x features, row-major.
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t time = 0;
  std::size_t features = 0;
  std::vector<float> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t t, std::size_t f, float fill = 0.0f)
      : channels(c), time(t), features(f), data(c * t * f, fill) {}

  float& at(std::size_t c, std::size_t t, std::size_t f) {
    return data[(c * time + t) * features + f];
  }
  float at(std::size_t c, std::size_t t, std::size_t f) const {
    return data[(c * time + t) * features + f];
  }
};

struct LinearParams {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::span<const float> weight;  // out x in
  std::span<const float> bias;    // out
};

struct ConvParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
  bool depthwise = false;
  bool transposed = false;
  std::span<const float> weight;
  std::span<const float> bias;

  std::size_t weight_count() const {
    return depthwise ? out_channels * kernel : in_channels * out_channels * kernel;
  }
};

/// "Same"-style padding for an odd kernel: total K - S, extra pad on the left.
/// With this split conv1d maps F -> F / S and conv_transpose1d maps F -> F * S.
struct Padding {
  std::size_t left = 0;
  std::size_t right = 0;
};
Padding same_padding(std::size_t kernel, std::size_t stride);

struct Conv2dParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_time = 1;
  std::size_t kernel_freq = 1;
  std::size_t pad_freq_left = 0;
  std::size_t pad_freq_right = 0;
  std::span<const float> weight;  // out x in x kernel_time x kernel_freq
  std::span<const float> bias;    // out
};

struct NormParams {
  std::span<const float> gamma;  // one per channel
  std::span<const float> beta;
  float eps = 1e-5f;
};

struct GruParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::span<const float> weight_ih;  // 3H x input
  std::span<const float> weight_hh;  // 3H x H
  std::span<const float> bias_ih;    // 3H
  std::span<const float> bias_hh;    // 3H
};

struct GruState {
  std::vector<float> hidden;

  static GruState zeros(std::size_t hidden_size) {
    return GruState{std::vector<float>(hidden_size, 0.0f)};
  }
  void reset() { std::fill(hidden.begin(), hidden.end(), 0.0f); }
};

inline float hard_swish(float x) { return x * std::clamp(x + 3.0f, 0.0f, 6.0f) / 6.0f; }
inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void hard_swish_inplace(std::span<float> x);
void sigmoid_inplace(std::span<float> x);

/// y = W x + b.
std::vector<float> affine(std::span<const float> x, const LinearParams& p);
void affine(std::span<const float> x, const LinearParams& p, std::span<float> y);

/// Output length of a (non-transposed) 1D convolution.
std::size_t conv1d_output_features(std::size_t in_features, const ConvParams& p);
/// Output length of a transposed 1D convolution.
std::size_t conv_transpose1d_output_features(std::size_t in_features, const ConvParams& p);

Tensor2 conv1d(const Tensor2& x, const ConvParams& p);
Tensor2 conv_transpose1d(const Tensor2& x, const ConvParams& p);

/// Valid in time, padded in frequency, stride 1.
Tensor3 conv2d(const Tensor3& x, const Conv2dParams& p);

/// Per channel: y = gamma * (x - mean) / sqrt(var + eps) + beta with mean and
/// (biased) variance taken over the feature axis of the current frame only.
void causal_instance_norm_inplace(Tensor2& x, const NormParams& p);
Tensor2 causal_instance_norm(const Tensor2& x, const NormParams& p);

/// Single-vector form (one channel).
void causal_instance_norm_inplace(std::span<float> x, const NormParams& p);

/// One GRU step, updating `state` in place:
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
void gru_step(std::span<const float> x, const GruParams& p, GruState& state);

}  // namespace fbsd::nn
