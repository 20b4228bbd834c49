#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace fbsd {

/// Real-input FFT of a fixed size backed by FFTW (single precision).
///
/// Plans are created once and executed with the new-array interface, so a
/// single instance may be shared by concurrent callers.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// Unnormalized forward transform; out.size() == bins().
  void forward(std::span<const float> in, std::span<std::complex<float>> out) const;

  /// Inverse transform scaled by 1/size, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<float>> in, std::span<float> out) const;

 private:
  struct Plans;
  std::size_t size_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace fbsd
