#pragma once

#include <cstddef>
#include <string>

#include "fbsd/config.hpp"

namespace fbsd {

/// Parameter and compute accounting for one model configuration.
///
/// "Mapping" is the learned input and output mapping (the F -> F' and
/// F' -> F affine layers); "core" is everything else. MACs are counted for
/// one streaming step (one STFT frame); windowing, FFT, norms and pointwise
/// nonlinearities are not counted.
struct CostReport {
  std::size_t params_total = 0;
  std::size_t params_mapping = 0;
  std::size_t params_core = 0;

  std::size_t macs_per_frame = 0;
  std::size_t macs_mapping = 0;
  std::size_t macs_core = 0;
  double frames_per_second = 0.0;
  double macs_per_second = 0.0;

  std::string to_text() const;
};

/// Fills the params_* fields in closed form.
CostReport count_params(const ModelConfig& config);

/// Fills the macs_* fields; frames_per_second = sample_rate / hop.
CostReport count_macs(const ModelConfig& config, double sample_rate = 48000.0,
                      std::size_t hop = 1024);

/// Both halves.
CostReport cost_report(const ModelConfig& config, double sample_rate = 48000.0,
                       std::size_t hop = 1024);

}  // namespace fbsd
