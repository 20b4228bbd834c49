#include "fbsd/audio.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fbsd {

void AudioBuffer::validate() const {
  if (sample_rate <= 0) {
    throw std::invalid_argument("sample rate must be positive, got " +
                                std::to_string(sample_rate));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw std::invalid_argument("non-finite sample at index " +
                                  std::to_string(i));
    }
  }
}

void require_full_band(const AudioBuffer& audio) {
  if (audio.sample_rate != kSampleRate) {
    throw std::invalid_argument("expected 48000 Hz audio, got " +
                                std::to_string(audio.sample_rate) + " Hz");
  }
}

double peak_abs(std::span<const float> x) {
  double peak = 0.0;
  for (float v : x) peak = std::max(peak, static_cast<double>(std::fabs(v)));
  return peak;
}

double mean_power(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace fbsd
