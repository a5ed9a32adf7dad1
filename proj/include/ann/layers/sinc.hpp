#pragma once

#include <cstddef>
#include <vector>

#include "ann/autodiff/graph.hpp"
#include "ann/autodiff/tensor.hpp"

namespace ann::layers {

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct SincConfig {
  std::size_t channels = 5;
  std::size_t kernel_size = 101;
  double sample_rate = 8000.0;
  double f_min = 30.0;
  // Upper edge of the last band; 0 means Nyquist.
  double f_max = 0.0;
};

// Smallest passband kept when a band collapses or hits Nyquist.
inline constexpr double kMinBandHz = 1.0;

struct Passband {
  double f_low = 0.0;
  double f_high = 0.0;
  bool clamped = false;
};

/// Learnable bandpass front end. One (f_low, band_width) pair per channel, in Hz.
struct SincFilterBank {
  std::size_t kernel_size = 101;
  double sample_rate = 8000.0;
  ad::Tensor f_low;       // [channels]
  ad::Tensor band_width;  // [channels]

  std::size_t channels() const { return f_low.size(); }
  double nyquist() const { return sample_rate / 2.0; }
  // Effective cutoffs f1 = |f_low|, f2 = f1 + |band_width|, limited to Nyquist.
  Passband passband(std::size_t channel) const;
};

void validate(const SincFilterBank& bank);

// Band edges equally spaced on the mel scale between f_min and f_max.
std::vector<double> mel_band_edges(std::size_t channels, double f_min, double f_max);
SincFilterBank mel_init(const SincConfig& config);

double hamming(std::size_t n, std::size_t kernel_size);

/// Hamming-windowed difference of two low-pass sincs per channel, as
/// [channels x 1 x K]. Differentiable w.r.t. f_low and band_width.
ad::Tensor sinc_kernels(ad::Graph& g, const SincFilterBank& bank);

// Filters intensity [B x T] (stride 1, no padding) into [B x channels x T-K+1].
ad::Tensor sinc_forward(ad::Graph& g, const SincFilterBank& bank, const ad::Tensor& signal);

}  // namespace ann::layers
