#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fbsd/audio.hpp"

namespace fbsd {

/// Kaiser-windowed sinc anti-aliasing filter for rational resampling by
/// up/down: cutoff at 1 / (2 max(up, down)) of the upsampled rate, 60 dB
/// rejection, roll-off band 10% of the cutoff. Normalized to unit DC gain.
std::vector<double> design_resampling_filter(std::size_t up, std::size_t down);

/// Polyphase rational resampler: zero-stuff by `up`, filter, keep every
/// `down`-th sample, with the filter delay compensated so output sample m is
/// aligned with input time m * down / up. Output length ceil(n * up / down).
std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down);

/// 48 kHz -> 10 kHz (ratio 5/24). Throws std::invalid_argument for other rates.
AudioBuffer resample_48k_to_10k(const AudioBuffer& audio);

}  // namespace fbsd
