#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fbsd {

/// Architecture hyper-parameters. Defaults give the full-band 48 kHz model.
struct ModelConfig {
  std::size_t bins = 1025;             // F: one-sided bins of a 2048-point STFT
  std::size_t mapped = 96;             // F': width of the learned input mapping
  std::size_t history = 32;            // T_pad: look-back frames for the encoder entry
  std::size_t mask_history = 3;        // T_M: look-back frames for the mask head
  std::vector<std::size_t> encoder_kernels{5, 3, 5, 3, 5, 3};
  std::vector<std::size_t> encoder_strides{2, 1, 2, 1, 2, 2};
  std::vector<std::size_t> encoder_out_channels{16, 16, 16, 16, 16, 64};
  std::size_t expansion_channels = 256;  // inverted-bottleneck width
  std::size_t entry_channels = 32;       // output channels of the entry conv2d
  std::size_t entry_freq_kernel = 3;
  std::size_t bottleneck_hidden = 64;    // must equal the last encoder block's channels
  std::size_t ae_hidden = 32;
  std::size_t decoder_channels = 64;
  std::size_t mask_freq_kernel = 3;

  std::size_t encoder_blocks() const { return encoder_kernels.size(); }

  /// Feature width entering each encoder block, followed by the final width:
  /// {96, 48, 48, 24, 24, 12, 6} for the defaults.
  std::vector<std::size_t> encoder_feature_sizes() const;

  /// Decoder kernels/strides: the encoder's, in reverse order.
  std::vector<std::size_t> decoder_kernels() const;
  std::vector<std::size_t> decoder_strides() const;

  /// Output channels of encoder block n feeding decoder block d (0-based):
  /// the skip for decoder block d comes from encoder block N_E - 1 - d.
  std::size_t skip_channels(std::size_t decoder_block) const;

  /// Channels entering decoder block d's fuse convolution.
  std::size_t decoder_in_channels(std::size_t decoder_block) const;

  std::size_t encoder_out_features() const { return encoder_feature_sizes().back(); }
  std::size_t encoder_out_channel_count() const { return encoder_out_channels.back(); }

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;

  std::string describe() const;
};

ModelConfig default_config();

}  // namespace fbsd
