#include "fbsd/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fbsd {

using nn::Tensor2;
using nn::Tensor3;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// HistoryRing

HistoryRing::HistoryRing(std::size_t capacity, std::size_t width)
    : capacity_(capacity), width_(width), data_(capacity * width, 0.0f) {}

void HistoryRing::push(std::span<const float> v) {
  if (v.size() != width_) throw std::invalid_argument("HistoryRing::push: width mismatch");
  if (capacity_ == 0) return;
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(head_ * width_));
  head_ = (head_ + 1) % capacity_;
}

std::span<const float> HistoryRing::at_age(std::size_t age) const {
  if (age >= capacity_) throw std::out_of_range("HistoryRing::at_age: age beyond capacity");
  const std::size_t slot = (head_ + capacity_ - 1 - age) % capacity_;
  return {data_.data() + slot * width_, width_};
}

void HistoryRing::reset() {
  std::fill(data_.begin(), data_.end(), 0.0f);
  head_ = 0;
}

void HistoryRing::copy_recent(std::size_t count, std::span<float> dst) const {
  if (count > capacity_ || dst.size() < count * width_) {
    throw std::invalid_argument("HistoryRing::copy_recent: bad count or destination");
  }
  for (std::size_t row = 0; row < count; ++row) {
    const auto src = at_age(count - 1 - row);
    std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(row * width_));
  }
}

// ---------------------------------------------------------------------------
// StreamState

void StreamState::reset() {
  mapped_history.reset();
  ae_history.reset();
  bottleneck_gru.reset();
  ae_gru.reset();
  ola.reset();
  frames = 0;
}

bool StreamState::operator==(const StreamState& other) const {
  return mapped_history == other.mapped_history && ae_history == other.ae_history &&
         bottleneck_gru.hidden == other.bottleneck_gru.hidden &&
         ae_gru.hidden == other.ae_gru.hidden && ola.tail == other.ola.tail &&
         frames == other.frames;
}

// ---------------------------------------------------------------------------
// Layer views

namespace {

struct EncoderBlock {
  nn::ConvParams expand, depthwise, project;
  nn::NormParams expand_norm, depthwise_norm, project_norm;
};

struct DecoderBlock {
  nn::ConvParams fuse, upsample;
  nn::NormParams fuse_norm, upsample_norm;
};

Tensor2 as_tensor2(Tensor3&& x) {
  if (x.time != 1) throw std::logic_error("expected a single time step");
  Tensor2 y;
  y.channels = x.channels;
  y.features = x.features;
  y.data = std::move(x.data);
  return y;
}

Tensor2 transpose(const Tensor2& x) {
  Tensor2 y(x.features, x.channels);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t f = 0; f < x.features; ++f) y.at(f, c) = x.at(c, f);
  }
  return y;
}

Tensor2 concat_channels(const Tensor2& a, const Tensor2& b) {
  if (a.features != b.features) {
    throw std::invalid_argument("skip connection width " + std::to_string(b.features) +
                                " does not match decoder width " + std::to_string(a.features));
  }
  Tensor2 y(a.channels + b.channels, a.features);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(),
            y.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return y;
}

void norm_act(Tensor2& x, const nn::NormParams& norm, bool activate) {
  nn::causal_instance_norm_inplace(x, norm);
  if (activate) nn::hard_swish_inplace(x.data);
}

}  // namespace

struct Denoiser::Layers {
  nn::NormParams map_in_norm_in, map_in_norm_out;
  nn::LinearParams map_in_fc;

  nn::Conv2dParams entry;
  nn::NormParams entry_norm;
  std::vector<EncoderBlock> encoder;

  nn::ConvParams squeeze, expand;
  nn::GruParams bottleneck_gru;

  std::vector<DecoderBlock> decoder;
  nn::ConvParams collapse;

  nn::LinearParams ae_down, ae_up;
  nn::NormParams ae_down_norm, ae_up_norm;
  nn::GruParams ae_gru;

  nn::Conv2dParams mask;
  nn::LinearParams map_out_fc;
};

Denoiser::Denoiser(ModelConfig config, std::shared_ptr<const ModelWeights> weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  if (!weights_) throw std::invalid_argument("Denoiser: null weights");
  config_.validate();
  weights_->validate(config_);

  const ModelWeights& w = *weights_;
  const ModelConfig& c = config_;
  auto layers = std::make_shared<Layers>();

  auto norm = [&w](const std::string& p) {
    return nn::NormParams{w.data(p + ".gamma"), w.data(p + ".beta")};
  };
  auto linear = [&w](const std::string& p, std::size_t in, std::size_t out) {
    return nn::LinearParams{in, out, w.data(p + ".weight"), w.data(p + ".bias")};
  };
  auto pointwise = [&w](const std::string& p, std::size_t in, std::size_t out) {
    nn::ConvParams cp;
    cp.in_channels = in;
    cp.out_channels = out;
    cp.weight = w.data(p + ".weight");
    cp.bias = w.data(p + ".bias");
    return cp;
  };
  auto gru = [&w](const std::string& p, std::size_t in, std::size_t hidden) {
    return nn::GruParams{in,
                         hidden,
                         w.data(p + ".weight_ih"),
                         w.data(p + ".weight_hh"),
                         w.data(p + ".bias_ih"),
                         w.data(p + ".bias_hh")};
  };

  layers->map_in_norm_in = norm("map_in.norm_in");
  layers->map_in_fc = linear("map_in.fc", c.bins, c.mapped);
  layers->map_in_norm_out = norm("map_in.norm_out");

  const auto entry_pad = nn::same_padding(c.entry_freq_kernel, 1);
  layers->entry = nn::Conv2dParams{1,
                                   c.entry_channels,
                                   c.history + 1,
                                   c.entry_freq_kernel,
                                   entry_pad.left,
                                   entry_pad.right,
                                   w.data("encoder.entry.conv.weight"),
                                   w.data("encoder.entry.conv.bias")};
  layers->entry_norm = norm("encoder.entry.norm");

  std::size_t in_ch = c.entry_channels;
  for (std::size_t n = 0; n < c.encoder_blocks(); ++n) {
    const std::string p = "encoder.blocks." + std::to_string(n);
    EncoderBlock b;
    b.expand = pointwise(p + ".expand", in_ch, c.expansion_channels);
    b.expand_norm = norm(p + ".expand_norm");
    b.depthwise = pointwise(p + ".depthwise", c.expansion_channels, c.expansion_channels);
    b.depthwise.depthwise = true;
    b.depthwise.kernel = c.encoder_kernels[n];
    b.depthwise.stride = c.encoder_strides[n];
    const auto pad = nn::same_padding(c.encoder_kernels[n], c.encoder_strides[n]);
    b.depthwise.pad_left = pad.left;
    b.depthwise.pad_right = pad.right;
    b.depthwise_norm = norm(p + ".depthwise_norm");
    b.project = pointwise(p + ".project", c.expansion_channels, c.encoder_out_channels[n]);
    b.project_norm = norm(p + ".project_norm");
    layers->encoder.push_back(b);
    in_ch = c.encoder_out_channels[n];
  }

  const std::size_t width = c.encoder_out_features();
  layers->squeeze = pointwise("bottleneck.squeeze", width, 1);
  layers->bottleneck_gru = gru("bottleneck.gru", c.encoder_out_channel_count(), c.bottleneck_hidden);
  layers->expand = pointwise("bottleneck.expand", 1, width);

  const auto kernels = c.decoder_kernels();
  const auto strides = c.decoder_strides();
  for (std::size_t d = 0; d < c.encoder_blocks(); ++d) {
    const std::string p = "decoder.blocks." + std::to_string(d);
    DecoderBlock b;
    b.fuse = pointwise(p + ".fuse", c.decoder_in_channels(d), c.decoder_channels);
    b.fuse_norm = norm(p + ".fuse_norm");
    b.upsample = pointwise(p + ".upsample", c.decoder_channels, c.decoder_channels);
    b.upsample.transposed = true;
    b.upsample.kernel = kernels[d];
    b.upsample.stride = strides[d];
    const auto pad = nn::same_padding(kernels[d], strides[d]);
    b.upsample.pad_left = pad.left;
    b.upsample.pad_right = pad.right;
    b.upsample_norm = norm(p + ".upsample_norm");
    layers->decoder.push_back(b);
  }
  layers->collapse = pointwise("decoder.collapse", c.decoder_channels, 1);

  layers->ae_down = linear("ae.down", c.mapped, c.ae_hidden);
  layers->ae_down_norm = norm("ae.down_norm");
  layers->ae_gru = gru("ae.gru", c.ae_hidden, c.ae_hidden);
  layers->ae_up = linear("ae.up", c.ae_hidden, c.mapped);
  layers->ae_up_norm = norm("ae.up_norm");

  const auto mask_pad = nn::same_padding(c.mask_freq_kernel, 1);
  layers->mask = nn::Conv2dParams{2,
                                  1,
                                  c.mask_history + 1,
                                  c.mask_freq_kernel,
                                  mask_pad.left,
                                  mask_pad.right,
                                  w.data("mask.conv.weight"),
                                  w.data("mask.conv.bias")};
  layers->map_out_fc = linear("map_out.fc", c.mapped, c.bins);

  layers_ = std::move(layers);
}

StreamState Denoiser::make_state(const WindowSpec* window) const {
  StreamState s;
  s.mapped_history =
      HistoryRing(std::max(config_.history, config_.mask_history) + 1, config_.mapped);
  s.ae_history = HistoryRing(config_.mask_history, config_.mapped);
  s.bottleneck_gru = nn::GruState::zeros(config_.bottleneck_hidden);
  s.ae_gru = nn::GruState::zeros(config_.ae_hidden);
  s.ola = window ? OlaState::zeros(*window)
                 : OlaState{std::vector<float>(kFftSize - kHop, 0.0f)};
  return s;
}

// ---------------------------------------------------------------------------
// Sub-modules

std::vector<float> Denoiser::map_in(std::span<const float> magnitude) const {
  if (magnitude.size() != config_.bins) {
    throw std::invalid_argument("map_in: expected " + std::to_string(config_.bins) +
                                " bins, got " + std::to_string(magnitude.size()));
  }
  const Layers& l = *layers_;
  std::vector<float> x(magnitude.begin(), magnitude.end());
  nn::causal_instance_norm_inplace(std::span<float>(x), l.map_in_norm_in);
  std::vector<float> h = nn::affine(x, l.map_in_fc);
  nn::causal_instance_norm_inplace(std::span<float>(h), l.map_in_norm_out);
  nn::hard_swish_inplace(h);
  return h;
}

EncoderOutput Denoiser::encoder(const Tensor3& in_pad) const {
  if (in_pad.channels != 1 || in_pad.time != config_.history + 1 ||
      in_pad.features != config_.mapped) {
    throw std::invalid_argument("encoder: input must be 1 x (T_pad + 1) x F'");
  }
  const Layers& l = *layers_;
  EncoderOutput out;
  Tensor2 x = as_tensor2(nn::conv2d(in_pad, l.entry));
  norm_act(x, l.entry_norm, true);
  for (const auto& b : l.encoder) {
    Tensor2 h = nn::conv1d(x, b.expand);
    norm_act(h, b.expand_norm, true);
    h = nn::conv1d(h, b.depthwise);
    norm_act(h, b.depthwise_norm, true);
    x = nn::conv1d(h, b.project);
    norm_act(x, b.project_norm, false);
    out.skips.push_back(x);
  }
  out.encoded = std::move(x);
  return out;
}

Tensor2 Denoiser::bottleneck(const Tensor2& encoded, nn::GruState& gru) const {
  if (encoded.channels != config_.encoder_out_channel_count() ||
      encoded.features != config_.encoder_out_features()) {
    throw std::invalid_argument("bottleneck: input shape does not match the encoder output");
  }
  const Layers& l = *layers_;
  const Tensor2 swapped = transpose(encoded);           // width x channels
  const Tensor2 squeezed = nn::conv1d(swapped, l.squeeze);  // 1 x channels
  nn::gru_step(squeezed.data, l.bottleneck_gru, gru);
  Tensor2 vec(1, gru.hidden.size());
  vec.data = gru.hidden;
  return transpose(nn::conv1d(vec, l.expand));
}

std::vector<float> Denoiser::decoder(const Tensor2& bottleneck,
                                     std::span<const Tensor2> skips) const {
  const std::size_t blocks = config_.encoder_blocks();
  if (skips.size() != blocks) {
    throw std::invalid_argument("decoder: expected " + std::to_string(blocks) + " skips");
  }
  const Layers& l = *layers_;
  Tensor2 x = bottleneck;
  for (std::size_t d = 0; d < blocks; ++d) {
    const Tensor2& skip = skips[blocks - 1 - d];
    Tensor2 h = nn::conv1d(concat_channels(x, skip), l.decoder[d].fuse);
    norm_act(h, l.decoder[d].fuse_norm, true);
    x = nn::conv_transpose1d(h, l.decoder[d].upsample);
    norm_act(x, l.decoder[d].upsample_norm, true);
  }
  Tensor2 y = nn::conv1d(x, l.collapse);
  if (y.features != config_.mapped) {
    throw std::logic_error("decoder: output width does not match F'");
  }
  return std::move(y.data);
}

std::vector<float> Denoiser::ae(std::span<const float> decoded, nn::GruState& gru) const {
  if (decoded.size() != config_.mapped) {
    throw std::invalid_argument("ae: input width does not match F'");
  }
  const Layers& l = *layers_;
  std::vector<float> h = nn::affine(decoded, l.ae_down);
  nn::causal_instance_norm_inplace(std::span<float>(h), l.ae_down_norm);
  nn::hard_swish_inplace(h);
  nn::gru_step(h, l.ae_gru, gru);
  std::vector<float> y = nn::affine(gru.hidden, l.ae_up);
  nn::causal_instance_norm_inplace(std::span<float>(y), l.ae_up_norm);
  return y;
}

std::vector<float> Denoiser::mask_head(const Tensor3& stacked) const {
  if (stacked.channels != 2 || stacked.time != config_.mask_history + 1 ||
      stacked.features != config_.mapped) {
    throw std::invalid_argument("mask_head: input must be 2 x (T_M + 1) x F'");
  }
  return std::move(nn::conv2d(stacked, layers_->mask).data);
}

std::vector<float> Denoiser::map_out(std::span<const float> mask_features) const {
  if (mask_features.size() != config_.mapped) {
    throw std::invalid_argument("map_out: input width does not match F'");
  }
  std::vector<float> m = nn::affine(mask_features, layers_->map_out_fc);
  nn::sigmoid_inplace(m);
  return m;
}

// ---------------------------------------------------------------------------
// Streaming

Tensor3 Denoiser::stack_in_pad(const HistoryRing& mapped) const {
  Tensor3 x(1, config_.history + 1, config_.mapped);
  mapped.copy_recent(config_.history + 1, x.data);
  return x;
}

Tensor3 Denoiser::stack_mask_input(const HistoryRing& mapped, const HistoryRing& ae,
                                   std::span<const float> ae_now) const {
  const std::size_t frames = config_.mask_history + 1;
  const std::size_t width = config_.mapped;
  Tensor3 x(2, frames, width);
  mapped.copy_recent(frames, std::span<float>(x.data).first(frames * width));
  std::span<float> ae_rows = std::span<float>(x.data).subspan(frames * width);
  ae.copy_recent(config_.mask_history, ae_rows);
  std::copy(ae_now.begin(), ae_now.end(),
            ae_rows.begin() + static_cast<std::ptrdiff_t>(config_.mask_history * width));
  return x;
}

std::vector<float> Denoiser::step_core(std::span<const float> mapped, StreamState& state,
                                       ActivationTrace* trace) const {
  state.mapped_history.push(mapped);
  Tensor3 in_pad = stack_in_pad(state.mapped_history);
  EncoderOutput enc = encoder(in_pad);
  Tensor2 b = bottleneck(enc.encoded, state.bottleneck_gru);
  std::vector<float> d = decoder(b, enc.skips);
  std::vector<float> a = ae(d, state.ae_gru);
  Tensor3 stacked = stack_mask_input(state.mapped_history, state.ae_history, a);
  std::vector<float> m = mask_head(stacked);
  state.ae_history.push(a);
  ++state.frames;

  if (trace) {
    trace->in_pad = std::move(in_pad);
    trace->encoder = std::move(enc.encoded);
    trace->encoder_skips = std::move(enc.skips);
    trace->bottleneck = std::move(b);
    trace->decoder = std::move(d);
    trace->ae = std::move(a);
    trace->mask_head = m;
  }
  return m;
}

std::vector<float> Denoiser::step_mask(std::span<const float> magnitude, StreamState& state,
                                       ActivationTrace* trace, StepTimings* timings) const {
  const auto t0 = timings ? Clock::now() : Clock::time_point{};
  std::vector<float> mapped = map_in(magnitude);
  const auto t1 = timings ? Clock::now() : Clock::time_point{};
  std::vector<float> features = step_core(mapped, state, trace);
  const auto t2 = timings ? Clock::now() : Clock::time_point{};
  std::vector<float> mask = map_out(features);
  if (timings) {
    const auto t3 = Clock::now();
    timings->map_in += t1 - t0;
    timings->core += t2 - t1;
    timings->map_out += t3 - t2;
  }
  if (trace) {
    trace->map_in = std::move(mapped);
    trace->mask = mask;
  }
  return mask;
}

StepResult Denoiser::step(const SpectralFrame& noisy, StreamState& state,
                          ActivationTrace* trace, StepTimings* timings) const {
  if (noisy.phase.size() != noisy.magnitude.size()) {
    throw std::invalid_argument("step: magnitude and phase lengths differ");
  }
  StepResult r;
  r.mask = step_mask(noisy.magnitude, state, trace, timings);
  r.denoised = apply_mask(noisy, r.mask);
  return r;
}

std::vector<std::vector<float>> Denoiser::process_offline(
    std::span<const std::vector<float>> magnitudes) const {
  const std::size_t frames = magnitudes.size();
  const std::size_t width = config_.mapped;
  const std::size_t t_pad = config_.history;
  const std::size_t t_m = config_.mask_history;

  std::vector<std::vector<float>> mapped;
  mapped.reserve(frames);
  for (const auto& m : magnitudes) mapped.push_back(map_in(m));

  nn::GruState b_gru = nn::GruState::zeros(config_.bottleneck_hidden);
  nn::GruState a_gru = nn::GruState::zeros(config_.ae_hidden);
  std::vector<std::vector<float>> ae_out(frames);
  std::vector<std::vector<float>> masks(frames);

  // Row j of a look-back stack holds frame t - (rows - 1) + j; frames before
  // the start of the utterance are zeros.
  auto fill_rows = [&](std::span<float> dst, std::size_t t, std::size_t rows,
                       const std::vector<std::vector<float>>& src) {
    for (std::size_t j = 0; j < rows; ++j) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t + j) -
                                 static_cast<std::ptrdiff_t>(rows - 1);
      auto row = dst.subspan(j * width, width);
      if (idx < 0) {
        std::fill(row.begin(), row.end(), 0.0f);
      } else {
        const auto& v = src[static_cast<std::size_t>(idx)];
        std::copy(v.begin(), v.end(), row.begin());
      }
    }
  };

  for (std::size_t t = 0; t < frames; ++t) {
    Tensor3 in_pad(1, t_pad + 1, width);
    fill_rows(in_pad.data, t, t_pad + 1, mapped);
    EncoderOutput enc = encoder(in_pad);
    Tensor2 b = bottleneck(enc.encoded, b_gru);
    std::vector<float> d = decoder(b, enc.skips);
    ae_out[t] = ae(d, a_gru);

    Tensor3 stacked(2, t_m + 1, width);
    std::span<float> all(stacked.data);
    fill_rows(all.first((t_m + 1) * width), t, t_m + 1, mapped);
    fill_rows(all.subspan((t_m + 1) * width), t, t_m + 1, ae_out);
    masks[t] = map_out(mask_head(stacked));
  }
  return masks;
}

}  // namespace fbsd
