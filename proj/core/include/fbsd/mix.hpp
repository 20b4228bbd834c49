#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsd/audio.hpp"

namespace fbsd {

inline constexpr int kMinSnrDb = -10;
inline constexpr int kMaxSnrDb = 25;
inline constexpr double kMinPeak = 0.001;
inline constexpr double kMaxPeak = 0.999;
inline constexpr std::size_t kMaxNoiseSources = 2;

class MixError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mixing parameters. Unset snr/peak are drawn from the seed: an integer SNR
/// uniform in [-10, 25] dB and a peak uniform in [0.001, 0.999].
struct MixSpec {
  std::optional<int> snr_db;
  std::optional<double> peak;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MixResult {
  AudioBuffer mixture;
  AudioBuffer clean;  // clean component after peak scaling
  AudioBuffer noise;  // noise component after SNR and peak scaling
  int snr_db = 0;
  double peak = 0.0;
};

/// Sums 1-2 noise sources (each looped or cropped to the clean length from a
/// seeded offset), scales the sum so 10 log10(P_clean / P_noise) == snr_db,
/// adds it to the clean signal and scales everything to the requested peak.
/// Throws MixError on a silent clean or noise signal.
MixResult mix_signals(const AudioBuffer& clean, std::span<const AudioBuffer> noises,
                      const MixSpec& spec);

/// Splits into non-overlapping segments of `seconds`; when the length is not a
/// whole number of segments, zeros are prepended so the first one is complete.
std::vector<AudioBuffer> segment(const AudioBuffer& audio, double seconds = 4.0);

}  // namespace fbsd
