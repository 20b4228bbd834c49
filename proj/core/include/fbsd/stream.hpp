#pragma once

#include <span>
#include <vector>

#include "fbsd/audio.hpp"
#include "fbsd/model.hpp"
#include "fbsd/stft.hpp"

namespace fbsd {

/// Hop-by-hop time-domain driver: sliding analysis buffer -> Denoiser::step
/// -> overlap-add. Output lags input by fft_size - hop samples.
class StreamingDenoiser {
 public:
  StreamingDenoiser(const Denoiser& model, WindowSpec window);

  /// Consumes exactly hop samples and returns hop finished samples.
  std::vector<float> process_hop(std::span<const float> hop);

  void reset();

  std::size_t hop() const { return window_.hop; }
  std::size_t latency_samples() const { return window_.fft_size - window_.hop; }
  std::size_t frames_processed() const { return state_.frames; }
  const StreamState& state() const { return state_; }

 private:
  const Denoiser& model_;
  WindowSpec window_;
  std::vector<float> buffer_;  // most recent fft_size input samples
  StreamState state_;
};

/// Denoises a whole buffer through StreamingDenoiser, compensating the
/// latency so the result is sample-aligned with the input and has equal length.
AudioBuffer denoise(const Denoiser& model, const AudioBuffer& noisy, const WindowSpec& window);

}  // namespace fbsd
