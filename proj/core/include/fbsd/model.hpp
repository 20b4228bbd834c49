#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fbsd/config.hpp"
#include "fbsd/nn.hpp"
#include "fbsd/stft.hpp"
#include "fbsd/weights.hpp"

namespace fbsd {

/// Fixed-capacity ring of equally sized vectors. Age 0 is the newest entry;
/// unfilled slots read as zeros (cold start).
class HistoryRing {
 public:
  HistoryRing() = default;
  HistoryRing(std::size_t capacity, std::size_t width);

  void push(std::span<const float> v);
  std::span<const float> at_age(std::size_t age) const;
  void reset();

  std::size_t capacity() const { return capacity_; }
  std::size_t width() const { return width_; }

  /// Copies the `count` most recent entries, oldest first, into rows of `dst`.
  void copy_recent(std::size_t count, std::span<float> dst) const;

  bool operator==(const HistoryRing&) const = default;

 private:
  std::size_t capacity_ = 0;
  std::size_t width_ = 0;
  std::size_t head_ = 0;  // slot that receives the next push
  std::vector<float> data_;
};

/// All mutable per-stream state. One instance per stream.
struct StreamState {
  HistoryRing mapped_history;  // Map_in outputs, max(T_pad, T_M) + 1 frames
  HistoryRing ae_history;      // previous autoencoder outputs, T_M frames
  nn::GruState bottleneck_gru;
  nn::GruState ae_gru;
  OlaState ola;
  std::size_t frames = 0;

  void reset();
  bool operator==(const StreamState& other) const;
};

/// Optional capture of every intermediate tensor of one step.
struct ActivationTrace {
  std::vector<float> map_in;              // F'
  nn::Tensor3 in_pad;                     // 1 x (T_pad + 1) x F'
  nn::Tensor2 encoder;                    // C_out x F_enc
  std::vector<nn::Tensor2> encoder_skips; // one per encoder block
  nn::Tensor2 bottleneck;                 // same shape as encoder
  std::vector<float> decoder;             // F'
  std::vector<float> ae;                  // F'
  std::vector<float> mask_head;           // F'
  std::vector<float> mask;                // F
};

struct EncoderOutput {
  nn::Tensor2 encoded;
  std::vector<nn::Tensor2> skips;
};

struct StepResult {
  std::vector<float> mask;
  SpectralFrame denoised;
};

/// Wall time spent in each part of a step.
struct StepTimings {
  std::chrono::nanoseconds map_in{0};
  std::chrono::nanoseconds core{0};
  std::chrono::nanoseconds map_out{0};
};

/// The causal denoiser. Immutable after construction and shareable between
/// threads; all per-stream state lives in StreamState.
class Denoiser {
 public:
  /// Validates the weights against the config; throws WeightFormatError or
  /// std::invalid_argument on mismatch.
  Denoiser(ModelConfig config, std::shared_ptr<const ModelWeights> weights);

  const ModelConfig& config() const { return config_; }
  const ModelWeights& weights() const { return *weights_; }

  StreamState make_state(const WindowSpec* window = nullptr) const;
  static void reset(StreamState& state) { state.reset(); }

  // Sub-modules, individually callable.
  std::vector<float> map_in(std::span<const float> magnitude) const;
  EncoderOutput encoder(const nn::Tensor3& in_pad) const;
  nn::Tensor2 bottleneck(const nn::Tensor2& encoded, nn::GruState& gru) const;
  std::vector<float> decoder(const nn::Tensor2& bottleneck,
                             std::span<const nn::Tensor2> skips) const;
  std::vector<float> ae(std::span<const float> decoded, nn::GruState& gru) const;
  /// `stacked` is 2 x (T_M + 1) x F': channel 0 the Map_in outputs, channel 1
  /// the autoencoder outputs, oldest frame first.
  std::vector<float> mask_head(const nn::Tensor3& stacked) const;
  std::vector<float> map_out(std::span<const float> mask_features) const;

  /// One streaming step on a magnitude frame; returns the mask M_t.
  std::vector<float> step_mask(std::span<const float> magnitude, StreamState& state,
                               ActivationTrace* trace = nullptr,
                               StepTimings* timings = nullptr) const;

  /// step_mask followed by mask application (phase untouched).
  StepResult step(const SpectralFrame& noisy, StreamState& state,
                  ActivationTrace* trace = nullptr, StepTimings* timings = nullptr) const;

  /// Everything between the two mappings: consumes one Map_in output and
  /// returns the mask-head features.
  std::vector<float> step_core(std::span<const float> mapped, StreamState& state,
                               ActivationTrace* trace = nullptr) const;

  /// Whole-utterance reference: the same causal recurrence computed with
  /// explicit history indexing over precomputed Map_in outputs.
  std::vector<std::vector<float>> process_offline(
      std::span<const std::vector<float>> magnitudes) const;

 private:
  struct Layers;

  nn::Tensor3 stack_in_pad(const HistoryRing& mapped) const;
  nn::Tensor3 stack_mask_input(const HistoryRing& mapped, const HistoryRing& ae,
                               std::span<const float> ae_now) const;

  ModelConfig config_;
  std::shared_ptr<const ModelWeights> weights_;
  std::shared_ptr<const Layers> layers_;
};

}  // namespace fbsd
