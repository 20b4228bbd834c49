#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace fbsd {

inline constexpr int kSampleRate = 48000;

/// Mono audio with amplitudes nominally in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  /// Throws std::invalid_argument on a non-positive rate or non-finite sample.
  void validate() const;
};

enum class SampleFormat : std::uint8_t { kPcm16, kPcm24, kFloat32 };

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incremental mono WAV reader; memory use is independent of file length.
class WavReader {
 public:
  explicit WavReader(const std::filesystem::path& path);
  ~WavReader();
  WavReader(const WavReader&) = delete;
  WavReader& operator=(const WavReader&) = delete;

  int sample_rate() const;
  SampleFormat format() const;
  std::size_t total_samples() const;
  std::size_t remaining() const;

  /// Fills `out` with up to out.size() samples; returns how many were read.
  std::size_t read(std::span<float> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Incremental mono WAV writer; the header sizes are patched by close().
class WavWriter {
 public:
  WavWriter(const std::filesystem::path& path, int sample_rate,
            SampleFormat format = SampleFormat::kFloat32);
  ~WavWriter();
  WavWriter(const WavWriter&) = delete;
  WavWriter& operator=(const WavWriter&) = delete;

  void write(std::span<const float> samples);
  void close();
  std::size_t samples_written() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Reads a mono RIFF/WAVE file (PCM 16/24-bit or IEEE float 32-bit).
/// Multichannel files are rejected.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes a mono WAV file. Samples are clipped to [-1, 1] for PCM formats.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               SampleFormat format = SampleFormat::kFloat32);

/// Rejects anything that is not 48 kHz.
void require_full_band(const AudioBuffer& audio);

double peak_abs(std::span<const float> x);
double mean_power(std::span<const float> x);

}  // namespace fbsd
