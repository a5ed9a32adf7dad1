#include "ann/layers/sinc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <spdlog/spdlog.h>

#include "ann/autodiff/ops.hpp"
#include "ann/errors.hpp"

namespace ann::layers {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Passband SincFilterBank::passband(std::size_t channel) const {
  Passband band;
  const double nyq = nyquist();
  band.f_low = std::abs(f_low.values()[channel]);
  if (band.f_low > nyq - kMinBandHz) {
    band.f_low = nyq - kMinBandHz;
    band.clamped = true;
  }
  const double width = std::max(std::abs(band_width.values()[channel]), kMinBandHz);
  band.f_high = band.f_low + width;
  if (band.f_high > nyq) {
    band.f_high = nyq;
    band.clamped = true;
  }
  return band;
}

void validate(const SincFilterBank& bank) {
  if (bank.kernel_size == 0 || bank.kernel_size % 2 == 0) {
    throw ConfigError("sinc kernel size must be odd, got " + std::to_string(bank.kernel_size));
  }
  if (!(bank.sample_rate > 0.0)) throw ConfigError("sinc sample rate must be positive");
  if (!bank.f_low.defined() || !bank.band_width.defined() || bank.f_low.rank() != 1 ||
      bank.f_low.shape() != bank.band_width.shape() || bank.f_low.size() == 0) {
    throw StructuralError("sinc: f_low and band_width must be non-empty vectors of equal length");
  }
}

std::vector<double> mel_band_edges(std::size_t channels, double f_min, double f_max) {
  if (!(f_min < f_max)) {
    throw ConfigError("mel_init needs f_min < f_max, got " + std::to_string(f_min) + " >= " +
                      std::to_string(f_max));
  }
  if (channels == 0) throw ConfigError("mel_init needs at least one channel");
  const double lo = hz_to_mel(f_min), hi = hz_to_mel(f_max);
  std::vector<double> edges(channels + 1);
  for (std::size_t i = 0; i <= channels; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(channels));
  }
  edges.front() = f_min;
  edges.back() = f_max;
  return edges;
}

SincFilterBank mel_init(const SincConfig& config) {
  const double f_max = config.f_max > 0.0 ? config.f_max : config.sample_rate / 2.0;
  if (f_max > config.sample_rate / 2.0) {
    throw ConfigError("sinc f_max " + std::to_string(f_max) + " Hz exceeds Nyquist");
  }
  const auto edges = mel_band_edges(config.channels, config.f_min, f_max);
  SincFilterBank bank;
  bank.kernel_size = config.kernel_size;
  bank.sample_rate = config.sample_rate;
  bank.f_low = ad::Tensor(ad::Shape{config.channels}, true);
  bank.band_width = ad::Tensor(ad::Shape{config.channels}, true);
  for (std::size_t c = 0; c < config.channels; ++c) {
    bank.f_low.values()[c] = edges[c];
    bank.band_width.values()[c] = edges[c + 1] - edges[c];
  }
  validate(bank);
  return bank;
}

double hamming(std::size_t n, std::size_t kernel_size) {
  if (kernel_size < 2) return 1.0;
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(kernel_size - 1));
}

namespace {

// 2 f sinc(2 f m) for normalized frequency f and integer tap offset m.
double lowpass_tap(double f, double m) {
  if (m == 0.0) return 2.0 * f;
  return std::sin(2.0 * std::numbers::pi * f * m) / (std::numbers::pi * m);
}

// d/df of lowpass_tap.
double lowpass_tap_slope(double f, double m) { return 2.0 * std::cos(2.0 * std::numbers::pi * f * m); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

ad::Tensor sinc_kernels(ad::Graph& g, const SincFilterBank& bank) {
  validate(bank);
  const std::size_t channels = bank.channels(), k = bank.kernel_size, center = (k - 1) / 2;
  const double fs = bank.sample_rate;
  ad::Tensor out(ad::Shape{channels, 1, k});
  auto ov = out.values();

  struct ChannelDerivs {
    double f1, f2;
    double df1_dlow, df2_dlow, df2_dwidth;
  };
  std::vector<ChannelDerivs> derivs(channels);
  const double nyq = bank.nyquist();
  for (std::size_t c = 0; c < channels; ++c) {
    const double raw_low = bank.f_low.values()[c];
    const double raw_width = bank.band_width.values()[c];
    const Passband band = bank.passband(c);
    if (band.clamped) spdlog::debug("sinc channel {} clamped to [{}, {}] Hz", c, band.f_low, band.f_high);
    ChannelDerivs d{band.f_low / fs, band.f_high / fs, 0.0, 0.0, 0.0};
    const bool low_free = std::abs(raw_low) <= nyq - kMinBandHz;
    const bool high_free = band.f_low + std::max(std::abs(raw_width), kMinBandHz) <= nyq;
    d.df1_dlow = low_free ? sign(raw_low) : 0.0;
    d.df2_dlow = high_free ? d.df1_dlow : 0.0;
    d.df2_dwidth = (high_free && std::abs(raw_width) >= kMinBandHz) ? sign(raw_width) : 0.0;
    derivs[c] = d;

    for (std::size_t n = 0; n <= center; ++n) {
      const double m = static_cast<double>(n) - static_cast<double>(center);
      const double tap = (lowpass_tap(d.f2, m) - lowpass_tap(d.f1, m)) * hamming(n, k);
      ov[c * k + n] = tap;
      ov[c * k + (k - 1 - n)] = tap;
    }
  }

  ad::Tensor f_low = bank.f_low, band_width = bank.band_width;
  return g.emit(ad::OpKind::sinc_kernels, {f_low, band_width}, out,
                [f_low, band_width, derivs = std::move(derivs), channels, k, center, fs](
                    std::span<const double> go) mutable {
                  for (std::size_t c = 0; c < channels; ++c) {
                    const auto& d = derivs[c];
                    // dL/df1 and dL/df2 in normalized frequency.
                    double g1 = 0.0, g2 = 0.0;
                    for (std::size_t n = 0; n < k; ++n) {
                      const double m = static_cast<double>(n) - static_cast<double>(center);
                      const double w = hamming(n, k) * go[c * k + n];
                      g2 += w * lowpass_tap_slope(d.f2, m);
                      g1 -= w * lowpass_tap_slope(d.f1, m);
                    }
                    g1 /= fs;
                    g2 /= fs;
                    if (f_low.requires_grad()) ad::Graph::grad_of(f_low)[c] += g1 * d.df1_dlow + g2 * d.df2_dlow;
                    if (band_width.requires_grad()) ad::Graph::grad_of(band_width)[c] += g2 * d.df2_dwidth;
                  }
                });
}

ad::Tensor sinc_forward(ad::Graph& g, const SincFilterBank& bank, const ad::Tensor& signal) {
  if (signal.rank() != 2) {
    throw DimensionError("sinc_forward: expected intensity [B x T], got " + ad::to_string(signal.shape()));
  }
  const std::size_t batch = signal.dim(0), len = signal.dim(1);
  ad::Tensor batched(ad::Shape{batch, 1, len},
                     std::vector<double>(signal.values().begin(), signal.values().end()));
  const ad::Tensor kernels = sinc_kernels(g, bank);
  return ad::conv1d_valid(g, batched, kernels, 1);
}

}  // namespace ann::layers
