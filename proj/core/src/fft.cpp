#include "fbsd/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace fbsd {
namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  fftwf_plan forward = nullptr;
  fftwf_plan inverse = nullptr;
};

RealFft::RealFft(std::size_t size) : size_(size), plans_(std::make_unique<Plans>()) {
  if (size < 2 || size % 2 != 0) {
    throw std::invalid_argument("FFT size must be even and >= 2");
  }
  std::vector<float> real(size);
  std::vector<std::complex<float>> spec(bins());
  auto* cplx = reinterpret_cast<fftwf_complex*>(spec.data());
  const int n = static_cast<int>(size);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

  std::lock_guard lock(planner_mutex());
  plans_->forward = fftwf_plan_dft_r2c_1d(n, real.data(), cplx, flags);
  plans_->inverse = fftwf_plan_dft_c2r_1d(n, cplx, real.data(), flags | FFTW_DESTROY_INPUT);
  if (plans_->forward == nullptr || plans_->inverse == nullptr) {
    throw std::runtime_error("FFTW planning failed");
  }
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftwf_destroy_plan(plans_->forward);
  if (plans_->inverse) fftwf_destroy_plan(plans_->inverse);
}

void RealFft::forward(std::span<const float> in,
                      std::span<std::complex<float>> out) const {
  if (in.size() != size_ || out.size() != bins()) {
    throw std::invalid_argument("RealFft::forward: size mismatch");
  }
  std::vector<float> buf(in.begin(), in.end());
  fftwf_execute_dft_r2c(plans_->forward, buf.data(),
                        reinterpret_cast<fftwf_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<float>> in,
                      std::span<float> out) const {
  if (in.size() != bins() || out.size() != size_) {
    throw std::invalid_argument("RealFft::inverse: size mismatch");
  }
  std::vector<std::complex<float>> buf(in.begin(), in.end());
  fftwf_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftwf_complex*>(buf.data()),
                        out.data());
  const float scale = 1.0f / static_cast<float>(size_);
  std::transform(out.begin(), out.end(), out.begin(), [scale](float v) { return v * scale; });
}

}  // namespace fbsd
