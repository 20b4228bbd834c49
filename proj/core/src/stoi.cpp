// Classic STOI. Constants are those of the original publication: 10 kHz
// internal rate, 256-sample Hann frames at 50% overlap, 512-point FFT,
// 15 one-third-octave bands starting at 150 Hz, 30-frame (384 ms) segments,
// -15 dB lower SDR bound and a 40 dB dynamic range for silent-frame removal.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fbsd/metrics.hpp"
#include "fbsd/resample.hpp"

namespace fbsd {
namespace {

constexpr int kStoiRate = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHopLen = kFrame / 2;
constexpr std::size_t kNfft = 512;
constexpr std::size_t kBins = kNfft / 2 + 1;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = 2.220446049250313e-16;

using Signal = std::vector<double>;

// Hann window without the zero end points (MATLAB hanning(N)).
std::vector<double> hanning(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  }
  return w;
}

// Band index ranges [lo, hi) over FFT bins.
std::vector<std::pair<std::size_t, std::size_t>> third_octave_bands() {
  std::vector<double> f(kBins);
  for (std::size_t k = 0; k < kBins; ++k) {
    f[k] = static_cast<double>(k) * kStoiRate / static_cast<double>(kNfft);
  }
  auto nearest = [&f](double target) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < f.size(); ++k) {
      if ((f[k] - target) * (f[k] - target) < (f[best] - target) * (f[best] - target)) best = k;
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> bands;
  for (std::size_t i = 0; i < kBands; ++i) {
    const double k = static_cast<double>(i);
    const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest(lo), nearest(hi));
  }
  return bands;
}

std::size_t frame_starts(std::size_t length) {
  return length > kFrame ? (length - kFrame + kHopLen - 1) / kHopLen : 0;
}

// Drops frames of both signals whose reference energy is more than
// kDynRange below the loudest reference frame, then overlap-adds the rest.
std::pair<Signal, Signal> remove_silent_frames(const Signal& x, const Signal& y) {
  const auto w = hanning(kFrame);
  const std::size_t count = frame_starts(x.size());
  std::vector<double> energy(count);
  for (std::size_t j = 0; j < count; ++j) {
    double e = 0.0;
    for (std::size_t n = 0; n < kFrame; ++n) {
      const double v = w[n] * x[j * kHopLen + n];
      e += v * v;
    }
    energy[j] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  if (count == 0) throw MetricError("stoi: input too short");
  const double top = *std::max_element(energy.begin(), energy.end());

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < count; ++j) {
    if (top - kDynRange - energy[j] < 0.0) keep.push_back(j);
  }
  const std::size_t out_len = (keep.size() - 1) * kHopLen + kFrame;
  Signal xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const std::size_t src = keep[i] * kHopLen;
    const std::size_t dst = i * kHopLen;
    for (std::size_t n = 0; n < kFrame; ++n) {
      xs[dst + n] += w[n] * x[src + n];
      ys[dst + n] += w[n] * y[src + n];
    }
  }
  return {std::move(xs), std::move(ys)};
}

// Third-octave band envelopes, bands x frames (row-major).
std::vector<double> band_envelopes(const Signal& x, std::size_t& frames) {
  static const auto w = hanning(kFrame);
  static const auto bands = third_octave_bands();
  // Twiddles exp(-2 pi i n / kNfft); the 512-point transform of a 256-sample
  // frame is evaluated directly.
  static const auto twiddles = [] {
    std::vector<std::pair<double, double>> t(kNfft);
    for (std::size_t i = 0; i < kNfft; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(kNfft);
      t[i] = {std::cos(a), std::sin(a)};
    }
    return t;
  }();

  frames = frame_starts(x.size());
  std::vector<double> power(kBins);
  std::vector<double> env(kBands * frames, 0.0);
  std::vector<double> seg(kFrame);
  for (std::size_t j = 0; j < frames; ++j) {
    for (std::size_t n = 0; n < kFrame; ++n) seg[n] = w[n] * x[j * kHopLen + n];
    for (std::size_t k = 0; k < kBins; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t n = 0; n < kFrame; ++n) {
        const auto& [c, sn] = twiddles[(k * n) % kNfft];
        re += seg[n] * c;
        im -= seg[n] * sn;
      }
      power[k] = re * re + im * im;
    }
    for (std::size_t b = 0; b < kBands; ++b) {
      double acc = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) acc += power[k];
      env[b * frames + j] = std::sqrt(acc);
    }
  }
  return env;
}

double norm(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

}  // namespace

double stoi(std::span<const float> ref, std::span<const float> est, int sample_rate) {
  if (ref.size() != est.size()) {
    throw MetricError("stoi: signal lengths differ: " + std::to_string(ref.size()) + " vs " +
                      std::to_string(est.size()));
  }
  Signal x(ref.begin(), ref.end());
  Signal y(est.begin(), est.end());
  if (sample_rate == 48000) {
    x = resample_poly(x, 5, 24);
    y = resample_poly(y, 5, 24);
  } else if (sample_rate != kStoiRate) {
    throw MetricError("stoi: unsupported sample rate " + std::to_string(sample_rate));
  }

  auto [xs, ys] = remove_silent_frames(x, y);
  std::size_t frames = 0, frames_y = 0;
  const auto x_env = band_envelopes(xs, frames);
  const auto y_env = band_envelopes(ys, frames_y);
  if (frames < kSegment) {
    throw MetricError("stoi: only " + std::to_string(frames) +
                      " non-silent frames, need at least 30 (input too short)");
  }

  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::array<double, kSegment> xv{}, yv{};
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      const double* xr = &x_env[b * frames + m - kSegment];
      const double* yr = &y_env[b * frames + m - kSegment];
      const double alpha = norm(xr, kSegment) / (norm(yr, kSegment) + kEps);
      double xm = 0.0, ym = 0.0;
      for (std::size_t i = 0; i < kSegment; ++i) {
        xv[i] = xr[i];
        yv[i] = std::min(yr[i] * alpha, xr[i] * (1.0 + clip));
        xm += xv[i];
        ym += yv[i];
      }
      xm /= kSegment;
      ym /= kSegment;
      for (std::size_t i = 0; i < kSegment; ++i) {
        xv[i] -= xm;
        yv[i] -= ym;
      }
      const double xn = norm(xv.data(), kSegment) + kEps;
      const double yn = norm(yv.data(), kSegment) + kEps;
      double corr = 0.0;
      for (std::size_t i = 0; i < kSegment; ++i) corr += (xv[i] / xn) * (yv[i] / yn);
      total += corr;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace fbsd
