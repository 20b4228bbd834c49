#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsd/config.hpp"

namespace fbsd {

enum class TensorRole : std::uint8_t { kWeight, kBias, kNormGain, kNormShift };

/// Name, shape and initialization scale of one learnable tensor.
struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  TensorRole role = TensorRole::kWeight;
  float init_scale = 0.0f;  // uniform(-s, s) for weights and biases

  std::size_t numel() const;
};

/// Every learnable tensor of the model, in file order.
std::vector<TensorSpec> weight_manifest(const ModelConfig& config);

struct NamedTensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

/// Named tensor store for all learnable parameters.
class ModelWeights {
 public:
  void set(const std::string& name, NamedTensor tensor);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const NamedTensor& at(const std::string& name) const;
  std::span<const float> data(const std::string& name) const { return at(name).data; }

  std::size_t scalar_count() const;
  std::size_t tensor_count() const { return tensors_.size(); }
  const std::map<std::string, NamedTensor>& tensors() const { return tensors_; }

  /// Checks that the store holds exactly the manifest of `config`.
  /// Throws WeightFormatError (kUnknownTensor / kMissingTensor / kShapeMismatch).
  void validate(const ModelConfig& config) const;

  bool operator==(const ModelWeights&) const = default;

 private:
  std::map<std::string, NamedTensor> tensors_;
};

enum class WeightErrorKind : std::uint8_t {
  kIo,
  kCorruptHeader,
  kVersionMismatch,
  kTruncatedPayload,
  kUnknownTensor,
  kMissingTensor,
  kShapeMismatch,
};

class WeightFormatError : public std::runtime_error {
 public:
  WeightFormatError(WeightErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  WeightErrorKind kind() const { return kind_; }

 private:
  WeightErrorKind kind_;
};

inline constexpr char kWeightMagic[4] = {'F', 'B', 'S', 'D'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct LoadedModel {
  ModelConfig config;
  ModelWeights weights;
};

std::vector<std::uint8_t> serialize_weights(const ModelWeights& weights, const ModelConfig& config);
LoadedModel deserialize_weights(std::span<const std::uint8_t> bytes);

void save_weights(const std::filesystem::path& path, const ModelWeights& weights,
                  const ModelConfig& config);
LoadedModel load_weights(const std::filesystem::path& path);

/// Deterministic initialization: fan-in scaled uniform for affine/conv/GRU
/// tensors, gamma = 1 and beta = 0 for norms.
ModelWeights random_init(const ModelConfig& config, std::uint64_t seed);

}  // namespace fbsd
