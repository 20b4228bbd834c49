#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsd/audio.hpp"

namespace fbsd {

/// Returned when the distortion term vanishes (est is an exact rescaling of
/// ref, up to float32 resolution).
inline constexpr double kSdrInfinity = std::numeric_limits<double>::infinity();

/// Ratios above this are treated as distortion-free and reported as
/// kSdrInfinity; aggregates cap each value here to keep means finite.
inline constexpr double kSdrCapDb = 120.0;

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scale-invariant SDR: target = (<est, ref> / |ref|^2) ref,
/// 10 log10(|target|^2 / |est - target|^2).
double si_sdr(std::span<const float> ref, std::span<const float> est);

/// Scale-dependent SDR: 10 log10(|beta ref|^2 / |ref - est|^2) with the same
/// projection coefficient beta. Equals snr() + 20 log10|beta|, and never
/// exceeds si_sdr().
double sd_sdr(std::span<const float> ref, std::span<const float> est);

/// Plain SNR, 10 log10(|ref|^2 / |ref - est|^2).
double snr(std::span<const float> ref, std::span<const float> est);

/// Classic STOI (15 third-octave bands from 150 Hz, 384 ms segments, 40 dB
/// silent-frame removal, -15 dB clipping). Inputs at 10 kHz are used as is;
/// 48 kHz inputs are resampled to 10 kHz first. Throws MetricError when
/// fewer than 30 non-silent frames remain.
double stoi(std::span<const float> ref, std::span<const float> est, int sample_rate);

struct UtteranceScores {
  std::string name;
  double si_sdr = 0.0;
  double sd_sdr = 0.0;
  double stoi = 0.0;  // clamped to [0, 1]
};

UtteranceScores evaluate(const AudioBuffer& clean, const AudioBuffer& processed,
                         std::string name = {});

/// Per-utterance scores plus means (SDR values capped at kSdrCapDb).
struct EvalReport {
  std::vector<UtteranceScores> utterances;

  void add(UtteranceScores s) { utterances.push_back(std::move(s)); }
  double mean_si_sdr() const;
  double mean_sd_sdr() const;
  double mean_stoi() const;

  /// One JSON object per line: utterances then an aggregate record.
  std::string to_jsonl() const;
  std::string summary_table() const;
};

}  // namespace fbsd
