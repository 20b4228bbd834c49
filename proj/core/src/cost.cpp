#include "fbsd/cost.hpp"

#include <cstdio>

namespace fbsd {
namespace {

std::size_t gru_params(std::size_t input, std::size_t hidden) {
  return 3 * hidden * (input + hidden) + 6 * hidden;
}

std::size_t gru_macs(std::size_t input, std::size_t hidden) {
  return 3 * hidden * (input + hidden);
}

}  // namespace

CostReport count_params(const ModelConfig& c) {
  c.validate();
  CostReport r;
  const std::size_t mapping = (c.bins * c.mapped + c.mapped) + (c.mapped * c.bins + c.bins);

  std::size_t core = 4;  // the two single-channel norms inside the input mapping
  const std::size_t entry_taps = (c.history + 1) * c.entry_freq_kernel;
  core += c.entry_channels * entry_taps + c.entry_channels + 2 * c.entry_channels;

  std::size_t in_ch = c.entry_channels;
  const std::size_t e = c.expansion_channels;
  for (std::size_t n = 0; n < c.encoder_blocks(); ++n) {
    const std::size_t out_ch = c.encoder_out_channels[n];
    core += in_ch * e + e + 2 * e;                          // expand + norm
    core += e * c.encoder_kernels[n] + e + 2 * e;           // depthwise + norm
    core += e * out_ch + out_ch + 2 * out_ch;               // project + norm
    in_ch = out_ch;
  }

  const std::size_t width = c.encoder_out_features();
  core += (width + 1) + gru_params(c.encoder_out_channel_count(), c.bottleneck_hidden) +
          (width + width);

  const auto kernels = c.decoder_kernels();
  const std::size_t d_ch = c.decoder_channels;
  for (std::size_t d = 0; d < c.encoder_blocks(); ++d) {
    core += c.decoder_in_channels(d) * d_ch + d_ch + 2 * d_ch;
    core += d_ch * d_ch * kernels[d] + d_ch + 2 * d_ch;
  }
  core += d_ch + 1;

  core += (c.mapped * c.ae_hidden + c.ae_hidden) + 2 + gru_params(c.ae_hidden, c.ae_hidden) +
          (c.ae_hidden * c.mapped + c.mapped) + 2;

  core += 2 * (c.mask_history + 1) * c.mask_freq_kernel + 1;

  r.params_mapping = mapping;
  r.params_core = core;
  r.params_total = mapping + core;
  return r;
}

CostReport count_macs(const ModelConfig& c, double sample_rate, std::size_t hop) {
  c.validate();
  CostReport r;
  const std::size_t mapping = 2 * c.bins * c.mapped;

  const auto widths = c.encoder_feature_sizes();
  std::size_t core = c.entry_channels * c.mapped * (c.history + 1) * c.entry_freq_kernel;

  std::size_t in_ch = c.entry_channels;
  const std::size_t e = c.expansion_channels;
  for (std::size_t n = 0; n < c.encoder_blocks(); ++n) {
    const std::size_t in_w = widths[n];
    const std::size_t out_w = widths[n + 1];
    core += in_ch * e * in_w;
    core += e * c.encoder_kernels[n] * out_w;
    core += e * c.encoder_out_channels[n] * out_w;
    in_ch = c.encoder_out_channels[n];
  }

  const std::size_t width = c.encoder_out_features();
  const std::size_t channels = c.encoder_out_channel_count();
  core += width * channels + gru_macs(channels, c.bottleneck_hidden) + width * channels;

  const auto kernels = c.decoder_kernels();
  const std::size_t d_ch = c.decoder_channels;
  for (std::size_t d = 0; d < c.encoder_blocks(); ++d) {
    const std::size_t in_w = widths[c.encoder_blocks() - d];
    core += c.decoder_in_channels(d) * d_ch * in_w;
    core += d_ch * d_ch * kernels[d] * in_w;  // every input position scatters K taps
  }
  core += d_ch * c.mapped;

  core += c.mapped * c.ae_hidden + gru_macs(c.ae_hidden, c.ae_hidden) + c.ae_hidden * c.mapped;
  core += c.mapped * 2 * (c.mask_history + 1) * c.mask_freq_kernel;

  r.macs_mapping = mapping;
  r.macs_core = core;
  r.macs_per_frame = mapping + core;
  r.frames_per_second = sample_rate / static_cast<double>(hop);
  r.macs_per_second = static_cast<double>(r.macs_per_frame) * r.frames_per_second;
  return r;
}

CostReport cost_report(const ModelConfig& c, double sample_rate, std::size_t hop) {
  CostReport r = count_macs(c, sample_rate, hop);
  const CostReport p = count_params(c);
  r.params_total = p.params_total;
  r.params_mapping = p.params_mapping;
  r.params_core = p.params_core;
  return r;
}

std::string CostReport::to_text() const {
  char buf[768];
  std::snprintf(buf, sizeof(buf),
                "params total      %10zu  (%.3f M)\n"
                "params mapping    %10zu  (%.3f M)\n"
                "params core       %10zu  (%.3f M)\n"
                "MACs per frame    %10zu  (%.4f G)\n"
                "  mapping         %10zu\n"
                "  core            %10zu  (%.4f G)\n"
                "frames per second %10.3f\n"
                "MACs per second   %10.4e  (%.4f G)\n",
                params_total, params_total / 1e6, params_mapping, params_mapping / 1e6,
                params_core, params_core / 1e6, macs_per_frame, macs_per_frame / 1e9,
                macs_mapping, macs_core, macs_core / 1e9, frames_per_second, macs_per_second,
                macs_per_second / 1e9);
  return buf;
}

}  // namespace fbsd
