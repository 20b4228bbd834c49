#include "fbsd/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>

namespace fbsd {
namespace {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

float fan_in_scale(std::size_t fan_in) {
  return 1.0f / std::sqrt(static_cast<float>(fan_in));
}

class ManifestBuilder {
 public:
  void affine(const std::string& prefix, std::size_t in, std::size_t out) {
    const float s = fan_in_scale(in);
    add(prefix + ".weight", {out, in}, TensorRole::kWeight, s);
    add(prefix + ".bias", {out}, TensorRole::kBias, s);
  }
  void conv1d(const std::string& prefix, std::size_t in, std::size_t out, std::size_t kernel,
              bool depthwise = false) {
    const std::size_t per_out = depthwise ? 1 : in;
    const float s = fan_in_scale(per_out * kernel);
    add(prefix + ".weight", {out, per_out, kernel}, TensorRole::kWeight, s);
    add(prefix + ".bias", {out}, TensorRole::kBias, s);
  }
  void conv_transpose1d(const std::string& prefix, std::size_t in, std::size_t out,
                        std::size_t kernel) {
    const float s = fan_in_scale(out * kernel);
    add(prefix + ".weight", {in, out, kernel}, TensorRole::kWeight, s);
    add(prefix + ".bias", {out}, TensorRole::kBias, s);
  }
  void conv2d(const std::string& prefix, std::size_t in, std::size_t out, std::size_t kt,
              std::size_t kf) {
    const float s = fan_in_scale(in * kt * kf);
    add(prefix + ".weight", {out, in, kt, kf}, TensorRole::kWeight, s);
    add(prefix + ".bias", {out}, TensorRole::kBias, s);
  }
  void norm(const std::string& prefix, std::size_t channels) {
    add(prefix + ".gamma", {channels}, TensorRole::kNormGain, 0.0f);
    add(prefix + ".beta", {channels}, TensorRole::kNormShift, 0.0f);
  }
  void gru(const std::string& prefix, std::size_t input, std::size_t hidden) {
    const float s = fan_in_scale(hidden);
    add(prefix + ".weight_ih", {3 * hidden, input}, TensorRole::kWeight, s);
    add(prefix + ".weight_hh", {3 * hidden, hidden}, TensorRole::kWeight, s);
    add(prefix + ".bias_ih", {3 * hidden}, TensorRole::kBias, s);
    add(prefix + ".bias_hh", {3 * hidden}, TensorRole::kBias, s);
  }

  std::vector<TensorSpec> take() { return std::move(specs_); }

 private:
  void add(std::string name, std::vector<std::size_t> shape, TensorRole role, float scale) {
    specs_.push_back(TensorSpec{std::move(name), std::move(shape), role, scale});
  }
  std::vector<TensorSpec> specs_;
};

// Little-endian byte writer/reader.
class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void f32(float v) {
    std::uint32_t u = 0;
    std::memcpy(&u, &v, sizeof(u));
    u32(u);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw WeightFormatError(WeightErrorKind::kCorruptHeader,
                              "weight file header is truncated or corrupt");
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const ModelConfig& c) {
  std::vector<std::uint32_t> words{
      static_cast<std::uint32_t>(c.bins), static_cast<std::uint32_t>(c.mapped),
      static_cast<std::uint32_t>(c.history), static_cast<std::uint32_t>(c.mask_history),
      static_cast<std::uint32_t>(c.encoder_blocks())};
  for (auto v : c.encoder_kernels) words.push_back(static_cast<std::uint32_t>(v));
  for (auto v : c.encoder_strides) words.push_back(static_cast<std::uint32_t>(v));
  for (auto v : c.encoder_out_channels) words.push_back(static_cast<std::uint32_t>(v));
  for (auto v : {c.expansion_channels, c.entry_channels, c.entry_freq_kernel,
                 c.bottleneck_hidden, c.ae_hidden, c.decoder_channels, c.mask_freq_kernel}) {
    words.push_back(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(words.size()));
  for (auto v : words) w.u32(v);
}

ModelConfig read_config(Reader& r) {
  const std::uint32_t count = r.u32();
  if (count < 5 || count > 4096) {
    throw WeightFormatError(WeightErrorKind::kCorruptHeader, "implausible config block size");
  }
  std::vector<std::size_t> words(count);
  for (auto& v : words) v = r.u32();
  const std::size_t blocks = words[4];
  if (count != 5 + 3 * blocks + 7) {
    throw WeightFormatError(WeightErrorKind::kCorruptHeader, "config block size mismatch");
  }
  ModelConfig c;
  c.bins = words[0];
  c.mapped = words[1];
  c.history = words[2];
  c.mask_history = words[3];
  auto slice = [&](std::size_t start) {
    return std::vector<std::size_t>(words.begin() + static_cast<std::ptrdiff_t>(start),
                                    words.begin() + static_cast<std::ptrdiff_t>(start + blocks));
  };
  c.encoder_kernels = slice(5);
  c.encoder_strides = slice(5 + blocks);
  c.encoder_out_channels = slice(5 + 2 * blocks);
  std::size_t i = 5 + 3 * blocks;
  c.expansion_channels = words[i++];
  c.entry_channels = words[i++];
  c.entry_freq_kernel = words[i++];
  c.bottleneck_hidden = words[i++];
  c.ae_hidden = words[i++];
  c.decoder_channels = words[i++];
  c.mask_freq_kernel = words[i++];
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw WeightFormatError(WeightErrorKind::kCorruptHeader, e.what());
  }
  return c;
}

}  // namespace

std::size_t TensorSpec::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<TensorSpec> weight_manifest(const ModelConfig& c) {
  c.validate();
  ManifestBuilder m;
  m.norm("map_in.norm_in", 1);
  m.affine("map_in.fc", c.bins, c.mapped);
  m.norm("map_in.norm_out", 1);

  m.conv2d("encoder.entry.conv", 1, c.entry_channels, c.history + 1, c.entry_freq_kernel);
  m.norm("encoder.entry.norm", c.entry_channels);
  std::size_t in_ch = c.entry_channels;
  for (std::size_t n = 0; n < c.encoder_blocks(); ++n) {
    const std::string p = "encoder.blocks." + std::to_string(n);
    m.conv1d(p + ".expand", in_ch, c.expansion_channels, 1);
    m.norm(p + ".expand_norm", c.expansion_channels);
    m.conv1d(p + ".depthwise", c.expansion_channels, c.expansion_channels,
             c.encoder_kernels[n], /*depthwise=*/true);
    m.norm(p + ".depthwise_norm", c.expansion_channels);
    m.conv1d(p + ".project", c.expansion_channels, c.encoder_out_channels[n], 1);
    m.norm(p + ".project_norm", c.encoder_out_channels[n]);
    in_ch = c.encoder_out_channels[n];
  }

  const std::size_t enc_width = c.encoder_out_features();
  m.conv1d("bottleneck.squeeze", enc_width, 1, 1);
  m.gru("bottleneck.gru", c.encoder_out_channel_count(), c.bottleneck_hidden);
  m.conv1d("bottleneck.expand", 1, enc_width, 1);

  const auto dec_kernels = c.decoder_kernels();
  for (std::size_t d = 0; d < c.encoder_blocks(); ++d) {
    const std::string p = "decoder.blocks." + std::to_string(d);
    m.conv1d(p + ".fuse", c.decoder_in_channels(d), c.decoder_channels, 1);
    m.norm(p + ".fuse_norm", c.decoder_channels);
    m.conv_transpose1d(p + ".upsample", c.decoder_channels, c.decoder_channels, dec_kernels[d]);
    m.norm(p + ".upsample_norm", c.decoder_channels);
  }
  m.conv1d("decoder.collapse", c.decoder_channels, 1, 1);

  m.affine("ae.down", c.mapped, c.ae_hidden);
  m.norm("ae.down_norm", 1);
  m.gru("ae.gru", c.ae_hidden, c.ae_hidden);
  m.affine("ae.up", c.ae_hidden, c.mapped);
  m.norm("ae.up_norm", 1);

  m.conv2d("mask.conv", 2, 1, c.mask_history + 1, c.mask_freq_kernel);

  m.affine("map_out.fc", c.mapped, c.bins);
  return m.take();
}

void ModelWeights::set(const std::string& name, NamedTensor tensor) {
  const std::size_t expected = std::accumulate(tensor.shape.begin(), tensor.shape.end(),
                                               std::size_t{1}, std::multiplies<>());
  if (expected != tensor.data.size()) {
    throw WeightFormatError(WeightErrorKind::kShapeMismatch,
                            "tensor '" + name + "' data does not match shape " +
                                shape_str(tensor.shape));
  }
  tensors_[name] = std::move(tensor);
}

const NamedTensor& ModelWeights::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw WeightFormatError(WeightErrorKind::kMissingTensor, "missing tensor '" + name + "'");
  }
  return it->second;
}

std::size_t ModelWeights::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.data.size();
  return n;
}

void ModelWeights::validate(const ModelConfig& config) const {
  const auto manifest = weight_manifest(config);
  std::set<std::string> expected;
  for (const auto& spec : manifest) expected.insert(spec.name);

  std::string unknown;
  for (const auto& [name, t] : tensors_) {
    if (!expected.count(name)) unknown += (unknown.empty() ? "" : ", ") + name;
  }
  if (!unknown.empty()) {
    throw WeightFormatError(WeightErrorKind::kUnknownTensor, "unknown tensors: " + unknown);
  }
  for (const auto& spec : manifest) {
    auto it = tensors_.find(spec.name);
    if (it == tensors_.end()) {
      throw WeightFormatError(WeightErrorKind::kMissingTensor,
                              "missing tensor '" + spec.name + "'");
    }
    if (it->second.shape != spec.shape) {
      throw WeightFormatError(WeightErrorKind::kShapeMismatch,
                              "tensor '" + spec.name + "' has shape " +
                                  shape_str(it->second.shape) + ", expected " +
                                  shape_str(spec.shape));
    }
  }
}

std::vector<std::uint8_t> serialize_weights(const ModelWeights& weights,
                                            const ModelConfig& config) {
  weights.validate(config);
  const auto manifest = weight_manifest(config);

  Writer w;
  w.bytes(kWeightMagic, 4);
  w.u32(kWeightFormatVersion);
  write_config(w, config);
  w.u32(static_cast<std::uint32_t>(manifest.size()));
  std::uint64_t offset = 0;
  for (const auto& spec : manifest) {
    w.u32(static_cast<std::uint32_t>(spec.name.size()));
    w.bytes(spec.name.data(), spec.name.size());
    w.u32(static_cast<std::uint32_t>(spec.shape.size()));
    for (auto d : spec.shape) w.u32(static_cast<std::uint32_t>(d));
    w.u64(offset);
    offset += spec.numel() * sizeof(float);
  }
  for (const auto& spec : manifest) {
    for (float v : weights.data(spec.name)) w.f32(v);
  }
  return std::move(w.out);
}

LoadedModel deserialize_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw WeightFormatError(WeightErrorKind::kCorruptHeader, "bad magic: not an FBSD weight file");
  }
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kWeightFormatVersion) {
    throw WeightFormatError(WeightErrorKind::kVersionMismatch,
                            "unsupported weight format version " + std::to_string(version) +
                                " (expected " + std::to_string(kWeightFormatVersion) + ")");
  }
  LoadedModel model;
  model.config = read_config(r);

  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset;
    std::size_t count;
  };
  const std::uint32_t count = r.u32();
  if (count > 100000) {
    throw WeightFormatError(WeightErrorKind::kCorruptHeader, "implausible tensor count");
  }
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const std::uint32_t name_len = r.u32();
    if (name_len == 0 || name_len > 1024) {
      throw WeightFormatError(WeightErrorKind::kCorruptHeader, "implausible tensor name length");
    }
    e.name = r.str(name_len);
    const std::uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 8) {
      throw WeightFormatError(WeightErrorKind::kCorruptHeader,
                              "implausible rank for tensor '" + e.name + "'");
    }
    e.count = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      e.shape.push_back(r.u32());
      e.count *= e.shape.back();
    }
    e.offset = r.u64();
    entries.push_back(std::move(e));
  }

  const std::size_t payload_start = 4 + r.pos();
  const std::size_t payload_size = bytes.size() - payload_start;
  for (const auto& e : entries) {
    const std::uint64_t end = e.offset + e.count * sizeof(float);
    if (e.offset % sizeof(float) != 0 || end > payload_size) {
      throw WeightFormatError(WeightErrorKind::kTruncatedPayload,
                              "payload truncated: tensor '" + e.name + "' needs bytes up to " +
                                  std::to_string(end) + ", payload has " +
                                  std::to_string(payload_size));
    }
    NamedTensor t;
    t.shape = e.shape;
    t.data.resize(e.count);
    const std::uint8_t* src = bytes.data() + payload_start + e.offset;
    for (std::size_t k = 0; k < e.count; ++k) {
      const std::uint8_t* p = src + 4 * k;
      const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                              (static_cast<std::uint32_t>(p[1]) << 8) |
                              (static_cast<std::uint32_t>(p[2]) << 16) |
                              (static_cast<std::uint32_t>(p[3]) << 24);
      std::memcpy(&t.data[k], &u, sizeof(float));
    }
    if (model.weights.contains(e.name)) {
      throw WeightFormatError(WeightErrorKind::kCorruptHeader,
                              "duplicate tensor '" + e.name + "'");
    }
    model.weights.set(e.name, std::move(t));
  }
  model.weights.validate(model.config);
  return model;
}

void save_weights(const std::filesystem::path& path, const ModelWeights& weights,
                  const ModelConfig& config) {
  const auto bytes = serialize_weights(weights, config);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WeightFormatError(WeightErrorKind::kIo, "cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw WeightFormatError(WeightErrorKind::kIo, "write failed: " + path.string());
}

LoadedModel load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw WeightFormatError(WeightErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

ModelWeights random_init(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // 24 random mantissa bits -> [0, 1); avoids the implementation-defined
  // std::uniform_real_distribution so files are identical across toolchains.
  auto unit = [&rng] { return static_cast<float>(rng() >> 40) * 0x1.0p-24f; };

  ModelWeights weights;
  for (const auto& spec : weight_manifest(config)) {
    NamedTensor t;
    t.shape = spec.shape;
    t.data.resize(spec.numel());
    switch (spec.role) {
      case TensorRole::kNormGain:
        std::fill(t.data.begin(), t.data.end(), 1.0f);
        break;
      case TensorRole::kNormShift:
        break;
      case TensorRole::kWeight:
      case TensorRole::kBias:
        for (float& v : t.data) v = (2.0f * unit() - 1.0f) * spec.init_scale;
        break;
    }
    weights.set(spec.name, std::move(t));
  }
  return weights;
}

}  // namespace fbsd
