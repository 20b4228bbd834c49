#include "fbsd/stream.hpp"

#include <algorithm>
#include <stdexcept>

namespace fbsd {

StreamingDenoiser::StreamingDenoiser(const Denoiser& model, WindowSpec window)
    : model_(model),
      window_(std::move(window)),
      buffer_(window_.fft_size, 0.0f),
      state_(model.make_state(&window_)) {
  if (window_.bins() != model.config().bins) {
    throw std::invalid_argument("StreamingDenoiser: STFT bins do not match the model's F");
  }
}

std::vector<float> StreamingDenoiser::process_hop(std::span<const float> hop) {
  if (hop.size() != window_.hop) {
    throw std::invalid_argument("process_hop: expected exactly one hop of samples");
  }
  std::copy(buffer_.begin() + static_cast<std::ptrdiff_t>(window_.hop), buffer_.end(),
            buffer_.begin());
  std::copy(hop.begin(), hop.end(),
            buffer_.end() - static_cast<std::ptrdiff_t>(window_.hop));
  const SpectralFrame noisy = analyze_frame(window_, buffer_);
  const StepResult r = model_.step(noisy, state_);
  return synthesize_frame(r.denoised, window_, state_.ola);
}

void StreamingDenoiser::reset() {
  std::fill(buffer_.begin(), buffer_.end(), 0.0f);
  state_.reset();
}

AudioBuffer denoise(const Denoiser& model, const AudioBuffer& noisy, const WindowSpec& window) {
  require_full_band(noisy);
  if (noisy.empty()) throw std::invalid_argument("denoise: empty input");
  StreamingDenoiser stream(model, window);
  const std::size_t hop = window.hop;
  const std::size_t latency = stream.latency_samples();
  const std::size_t needed = noisy.size() + latency;
  const std::size_t hops = (needed + hop - 1) / hop;

  AudioBuffer out;
  out.sample_rate = noisy.sample_rate;
  out.samples.reserve(hops * hop);
  std::vector<float> block(hop);
  for (std::size_t h = 0; h < hops; ++h) {
    std::fill(block.begin(), block.end(), 0.0f);
    const std::size_t start = h * hop;
    if (start < noisy.size()) {
      const std::size_t n = std::min(hop, noisy.size() - start);
      std::copy_n(noisy.samples.begin() + static_cast<std::ptrdiff_t>(start), n, block.begin());
    }
    const auto y = stream.process_hop(block);
    out.samples.insert(out.samples.end(), y.begin(), y.end());
  }
  out.samples.erase(out.samples.begin(), out.samples.begin() + static_cast<std::ptrdiff_t>(latency));
  out.samples.resize(noisy.size());
  return out;
}

}  // namespace fbsd
