#include "fbsd/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace fbsd {
namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<double> design_resampling_filter(std::size_t up, std::size_t down) {
  if (up == 0 || down == 0) throw std::invalid_argument("resampling factors must be positive");
  const std::size_t g = std::gcd(up, down);
  const double p = static_cast<double>(up / g);
  const double q = static_cast<double>(down / g);

  const double rejection_db = 60.0;
  const double cutoff = 1.0 / (2.0 * std::max(p, q));
  const double roll_off = cutoff / 10.0;
  const auto half = static_cast<std::ptrdiff_t>(
      std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection_db - 8.7);

  const std::size_t length = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> h(length);
  const double norm = std::cyl_bessel_i(0.0, beta);
  double sum = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
    const double ratio = 2.0 * static_cast<double>(i) / static_cast<double>(length - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / norm;
    h[i] = kaiser * 2.0 * p * cutoff * sinc(2.0 * cutoff * t);
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down) {
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (x.empty()) return {};
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  const std::vector<double> h = design_resampling_filter(up, down);
  const auto half = static_cast<std::ptrdiff_t>((h.size() - 1) / 2);
  const auto taps = static_cast<std::ptrdiff_t>(h.size());
  const auto u = static_cast<std::ptrdiff_t>(up);
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  const std::size_t n_out = (x.size() * up + down - 1) / down;

  // y[m] = up * sum_n x[n] h[m * down + half - n * up], h zero outside [0, taps).
  std::vector<double> y(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(m * down) + half;
    std::ptrdiff_t n_lo = center - (taps - 1);
    n_lo = n_lo <= 0 ? 0 : (n_lo + u - 1) / u;
    const std::ptrdiff_t n_hi = std::min(n_in - 1, center / u);
    double acc = 0.0;
    for (std::ptrdiff_t n = n_lo; n <= n_hi; ++n) {
      acc += x[static_cast<std::size_t>(n)] * h[static_cast<std::size_t>(center - n * u)];
    }
    y[m] = acc * static_cast<double>(up);
  }
  return y;
}

AudioBuffer resample_48k_to_10k(const AudioBuffer& audio) {
  if (audio.sample_rate != 48000) {
    throw std::invalid_argument("resample_48k_to_10k: input must be 48000 Hz, got " +
                                std::to_string(audio.sample_rate));
  }
  const std::vector<double> x(audio.samples.begin(), audio.samples.end());
  const std::vector<double> y = resample_poly(x, 5, 24);
  AudioBuffer out;
  out.sample_rate = 10000;
  out.samples.assign(y.begin(), y.end());
  return out;
}

}  // namespace fbsd
