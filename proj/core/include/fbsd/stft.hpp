#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fbsd/audio.hpp"
#include "fbsd/fft.hpp"

namespace fbsd {

inline constexpr std::size_t kFftSize = 2048;
inline constexpr std::size_t kHop = kFftSize / 2;

/// Analysis/synthesis window pair at 50% overlap. The same periodic
/// square-root Hann window is used on both sides, so w[n]^2 + w[n + hop]^2 == 1.
struct WindowSpec {
  std::size_t fft_size = kFftSize;
  std::size_t hop = kHop;
  std::vector<float> window;
  std::shared_ptr<const RealFft> fft;

  std::size_t bins() const { return fft_size / 2 + 1; }
};

WindowSpec make_window_spec(std::size_t fft_size = kFftSize);

/// Periodic square-root Hann window of the given length.
std::vector<float> sqrt_hann(std::size_t length);

/// One STFT frame split into magnitude and phase (one-sided, F bins).
struct SpectralFrame {
  std::vector<float> magnitude;
  std::vector<float> phase;

  std::size_t bins() const { return magnitude.size(); }
};

/// Pending overlap-add samples carried between synthesis frames.
struct OlaState {
  std::vector<float> tail;

  static OlaState zeros(const WindowSpec& spec) {
    return OlaState{std::vector<float>(spec.fft_size - spec.hop, 0.0f)};
  }
  void reset() { std::fill(tail.begin(), tail.end(), 0.0f); }
};

/// Windowed FFT of exactly fft_size samples.
SpectralFrame analyze_frame(const WindowSpec& spec, std::span<const float> recent_samples);

/// magnitude * mask, phase untouched. Mask entries must lie in [0, 1].
SpectralFrame apply_mask(const SpectralFrame& frame, std::span<const float> mask);

/// Inverse FFT, synthesis window and overlap-add. Returns hop finished samples
/// and advances `state`.
std::vector<float> synthesize_frame(const SpectralFrame& frame, const WindowSpec& spec,
                                    OlaState& state);

/// Causal framing of a whole signal: fft_size - hop zeros are prepended and
/// the last partial hop is zero-padded, giving ceil(len / hop) frames. Frame t
/// ends at input sample (t + 1) * hop.
std::vector<SpectralFrame> frame_stream(const AudioBuffer& audio, const WindowSpec& spec);

/// Number of frames frame_stream() produces for `num_samples` samples.
std::size_t frame_count(std::size_t num_samples, std::size_t hop);

/// Runs synthesize_frame over a frame sequence from a zero tail and
/// concatenates the emitted hops. Output sample i corresponds to input sample
/// i - (fft_size - hop) under the frame_stream() convention.
std::vector<float> synthesize_stream(std::span<const SpectralFrame> frames,
                                     const WindowSpec& spec);

}  // namespace fbsd
