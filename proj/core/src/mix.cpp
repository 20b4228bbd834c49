#include "fbsd/mix.hpp"

#include <cmath>
#include <random>
#include <string>

namespace fbsd {

void MixSpec::validate() const {
  if (snr_db && (*snr_db < kMinSnrDb || *snr_db > kMaxSnrDb)) {
    throw MixError("SNR " + std::to_string(*snr_db) + " dB outside [-10, 25]");
  }
  if (peak && !(*peak >= kMinPeak && *peak <= kMaxPeak)) {
    throw MixError("peak " + std::to_string(*peak) + " outside [0.001, 0.999]");
  }
}

MixResult mix_signals(const AudioBuffer& clean, std::span<const AudioBuffer> noises,
                      const MixSpec& spec) {
  spec.validate();
  if (noises.empty() || noises.size() > kMaxNoiseSources) {
    throw MixError("need 1 or 2 noise sources, got " + std::to_string(noises.size()));
  }
  if (clean.empty()) throw MixError("clean signal is empty");
  for (const auto& n : noises) {
    if (n.sample_rate != clean.sample_rate) throw MixError("noise sample rate differs from clean");
    if (n.empty()) throw MixError("noise signal is empty");
  }

  std::mt19937_64 rng(spec.seed);
  MixResult r;
  r.snr_db = spec.snr_db ? *spec.snr_db
                         : std::uniform_int_distribution<int>(kMinSnrDb, kMaxSnrDb)(rng);
  r.peak = spec.peak ? *spec.peak : std::uniform_real_distribution<double>(kMinPeak, kMaxPeak)(rng);

  const std::size_t len = clean.size();
  std::vector<double> noise(len, 0.0);
  for (const auto& n : noises) {
    const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, n.size() - 1)(rng);
    for (std::size_t i = 0; i < len; ++i) noise[i] += n.samples[(offset + i) % n.size()];
  }

  double p_clean = 0.0, p_noise = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    p_clean += static_cast<double>(clean.samples[i]) * clean.samples[i];
    p_noise += noise[i] * noise[i];
  }
  if (p_clean == 0.0) throw MixError("cannot set SNR: clean signal is silent");
  if (p_noise == 0.0) throw MixError("cannot set SNR: noise signal is silent");

  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, r.snr_db / 10.0)));
  std::vector<double> mixture(len);
  double top = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    noise[i] *= gain;
    mixture[i] = clean.samples[i] + noise[i];
    top = std::max(top, std::fabs(mixture[i]));
  }
  if (top == 0.0) throw MixError("mixture is silent");
  const double scale = r.peak / top;

  for (AudioBuffer* b : {&r.mixture, &r.clean, &r.noise}) {
    b->sample_rate = clean.sample_rate;
    b->samples.resize(len);
  }
  for (std::size_t i = 0; i < len; ++i) {
    r.mixture.samples[i] = static_cast<float>(mixture[i] * scale);
    r.clean.samples[i] = static_cast<float>(clean.samples[i] * scale);
    r.noise.samples[i] = static_cast<float>(noise[i] * scale);
  }
  return r;
}

std::vector<AudioBuffer> segment(const AudioBuffer& audio, double seconds) {
  if (seconds <= 0.0) throw std::invalid_argument("segment length must be positive");
  const auto seg_len = static_cast<std::size_t>(std::llround(seconds * audio.sample_rate));
  if (seg_len == 0) throw std::invalid_argument("segment shorter than one sample");
  const std::size_t count = (audio.size() + seg_len - 1) / seg_len;
  const std::size_t lead = count * seg_len - audio.size();

  std::vector<AudioBuffer> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    out[s].sample_rate = audio.sample_rate;
    out[s].samples.assign(seg_len, 0.0f);
    for (std::size_t i = 0; i < seg_len; ++i) {
      const std::size_t padded = s * seg_len + i;
      if (padded >= lead) out[s].samples[i] = audio.samples[padded - lead];
    }
  }
  return out;
}

}  // namespace fbsd
