#include "fbsd/stft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fbsd {

std::vector<float> sqrt_hann(std::size_t length) {
  std::vector<float> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                             static_cast<double>(length));
    w[n] = static_cast<float>(std::sqrt(hann));
  }
  return w;
}

WindowSpec make_window_spec(std::size_t fft_size) {
  if (fft_size < 4 || fft_size % 2 != 0) {
    throw std::invalid_argument("fft_size must be even and >= 4");
  }
  WindowSpec spec;
  spec.fft_size = fft_size;
  spec.hop = fft_size / 2;
  spec.window = sqrt_hann(fft_size);
  spec.fft = std::make_shared<const RealFft>(fft_size);
  return spec;
}

SpectralFrame analyze_frame(const WindowSpec& spec, std::span<const float> recent_samples) {
  if (recent_samples.size() != spec.fft_size) {
    throw std::invalid_argument("analyze_frame: expected " + std::to_string(spec.fft_size) +
                                " samples, got " + std::to_string(recent_samples.size()));
  }
  std::vector<float> windowed(spec.fft_size);
  for (std::size_t n = 0; n < spec.fft_size; ++n) {
    windowed[n] = recent_samples[n] * spec.window[n];
  }
  std::vector<std::complex<float>> bins(spec.bins());
  spec.fft->forward(windowed, bins);

  SpectralFrame frame;
  frame.magnitude.resize(bins.size());
  frame.phase.resize(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) {
    frame.magnitude[k] = std::abs(bins[k]);
    frame.phase[k] = std::arg(bins[k]);
  }
  return frame;
}

SpectralFrame apply_mask(const SpectralFrame& frame, std::span<const float> mask) {
  if (mask.size() != frame.magnitude.size()) {
    throw std::invalid_argument("apply_mask: mask has " + std::to_string(mask.size()) +
                                " entries, frame has " + std::to_string(frame.magnitude.size()));
  }
  SpectralFrame out;
  out.magnitude.resize(mask.size());
  out.phase = frame.phase;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!(mask[k] >= 0.0f && mask[k] <= 1.0f)) {
      throw std::invalid_argument("apply_mask: entry " + std::to_string(k) +
                                  " outside [0, 1]");
    }
    out.magnitude[k] = frame.magnitude[k] * mask[k];
  }
  return out;
}

std::vector<float> synthesize_frame(const SpectralFrame& frame, const WindowSpec& spec,
                                    OlaState& state) {
  const std::size_t bins = spec.bins();
  if (frame.magnitude.size() != bins || frame.phase.size() != bins) {
    throw std::invalid_argument("synthesize_frame: frame has wrong number of bins");
  }
  const std::size_t overlap = spec.fft_size - spec.hop;
  if (state.tail.size() != overlap) {
    throw std::invalid_argument("synthesize_frame: OLA tail has wrong length");
  }

  std::vector<std::complex<float>> spectrum(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    spectrum[k] = std::polar(frame.magnitude[k], frame.phase[k]);
  }
  std::vector<float> time(spec.fft_size);
  spec.fft->inverse(spectrum, time);
  for (std::size_t n = 0; n < spec.fft_size; ++n) time[n] *= spec.window[n];

  std::vector<float> out(spec.hop);
  for (std::size_t n = 0; n < spec.hop; ++n) {
    out[n] = time[n] + (n < overlap ? state.tail[n] : 0.0f);
  }

  std::vector<float> next(overlap, 0.0f);
  for (std::size_t n = 0; n < overlap; ++n) {
    const std::size_t carried = n + spec.hop;
    float v = time[carried];
    if (carried < overlap) v += state.tail[carried];
    // Flush denormals so the idle tail does not slow the stream down.
    if (std::fabs(v) < std::numeric_limits<float>::min()) v = 0.0f;
    next[n] = v;
  }
  state.tail = std::move(next);
  return out;
}

std::size_t frame_count(std::size_t num_samples, std::size_t hop) {
  return (num_samples + hop - 1) / hop;
}

std::vector<SpectralFrame> frame_stream(const AudioBuffer& audio, const WindowSpec& spec) {
  if (audio.empty()) throw std::invalid_argument("frame_stream: empty input");
  const std::size_t lead = spec.fft_size - spec.hop;
  const std::size_t count = frame_count(audio.size(), spec.hop);

  std::vector<float> padded(lead + count * spec.hop, 0.0f);
  std::copy(audio.samples.begin(), audio.samples.end(),
            padded.begin() + static_cast<std::ptrdiff_t>(lead));

  std::vector<SpectralFrame> frames;
  frames.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    frames.push_back(analyze_frame(
        spec, std::span<const float>(padded).subspan(t * spec.hop, spec.fft_size)));
  }
  return frames;
}

std::vector<float> synthesize_stream(std::span<const SpectralFrame> frames,
                                     const WindowSpec& spec) {
  OlaState state = OlaState::zeros(spec);
  std::vector<float> out;
  out.reserve(frames.size() * spec.hop);
  for (const auto& frame : frames) {
    const auto hop = synthesize_frame(frame, spec, state);
    out.insert(out.end(), hop.begin(), hop.end());
  }
  return out;
}

}  // namespace fbsd
