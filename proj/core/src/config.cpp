#include "fbsd/config.hpp"

#include <sstream>
#include <stdexcept>

namespace fbsd {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid model config: " + what);
}

}  // namespace

ModelConfig default_config() { return ModelConfig{}; }

std::vector<std::size_t> ModelConfig::encoder_feature_sizes() const {
  std::vector<std::size_t> sizes{mapped};
  for (std::size_t s : encoder_strides) sizes.push_back(sizes.back() / (s == 0 ? 1 : s));
  return sizes;
}

std::vector<std::size_t> ModelConfig::decoder_kernels() const {
  return {encoder_kernels.rbegin(), encoder_kernels.rend()};
}

std::vector<std::size_t> ModelConfig::decoder_strides() const {
  return {encoder_strides.rbegin(), encoder_strides.rend()};
}

std::size_t ModelConfig::skip_channels(std::size_t decoder_block) const {
  return encoder_out_channels[encoder_blocks() - 1 - decoder_block];
}

std::size_t ModelConfig::decoder_in_channels(std::size_t decoder_block) const {
  const std::size_t previous =
      decoder_block == 0 ? encoder_out_channel_count() : decoder_channels;
  return previous + skip_channels(decoder_block);
}

void ModelConfig::validate() const {
  require(bins >= 2, "bins must be >= 2");
  require(mapped >= 1, "mapped width must be >= 1");
  require(history >= 1, "history must be >= 1");
  require(encoder_blocks() >= 1, "at least one encoder block required");
  require(encoder_strides.size() == encoder_blocks() &&
              encoder_out_channels.size() == encoder_blocks(),
          "encoder kernels, strides and channels must have equal length");
  std::size_t width = mapped;
  for (std::size_t n = 0; n < encoder_blocks(); ++n) {
    const std::size_t k = encoder_kernels[n];
    const std::size_t s = encoder_strides[n];
    require(k % 2 == 1, "encoder kernels must be odd");
    require(s >= 1 && s <= 2, "encoder strides must be 1 or 2");
    require(k >= s, "encoder kernel must not be smaller than its stride");
    require(width % s == 0, "feature width " + std::to_string(width) +
                                " is not divisible by stride " + std::to_string(s));
    width /= s;
    require(encoder_out_channels[n] >= 1, "encoder channels must be >= 1");
  }
  require(width >= 1, "encoder output width must be positive");
  require(expansion_channels >= 1 && entry_channels >= 1 && decoder_channels >= 1,
          "channel counts must be >= 1");
  require(entry_freq_kernel % 2 == 1 && mask_freq_kernel % 2 == 1,
          "frequency kernels must be odd");
  require(bottleneck_hidden == encoder_out_channel_count(),
          "bottleneck GRU size must equal the last encoder block's channels");
  require(ae_hidden >= 1, "autoencoder width must be >= 1");
}

std::string ModelConfig::describe() const {
  std::ostringstream os;
  auto list = [&os](const std::vector<std::size_t>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  os << "F=" << bins << " F'=" << mapped << " T_pad=" << history << " T_M=" << mask_history
     << " N_E=" << encoder_blocks() << " kernels=";
  list(encoder_kernels);
  os << " strides=";
  list(encoder_strides);
  os << " channels=";
  list(encoder_out_channels);
  os << " C_E=" << expansion_channels << " entry=" << entry_channels
     << " gru_b=" << bottleneck_hidden << " ae=" << ae_hidden
     << " dec=" << decoder_channels;
  return os.str();
}

}  // namespace fbsd
