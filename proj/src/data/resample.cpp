#include "ann/data/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ann/errors.hpp"

namespace ann::data {
namespace {

double kaiser_beta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0) {
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  }
  return 0.0;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<double> resample(std::span<const double> samples, std::uint32_t native_rate, std::uint32_t target_rate,
                             const ResamplerOptions& options) {
  if (native_rate == 0 || target_rate == 0) throw ConfigError("sample rates must be positive");
  if (target_rate > native_rate) {
    throw ConfigError("upsampling is not supported (" + std::to_string(native_rate) + " Hz -> " +
                      std::to_string(target_rate) + " Hz)");
  }
  if (target_rate == native_rate) return {samples.begin(), samples.end()};
  if (!(options.cutoff_fraction > 0.0 && options.cutoff_fraction <= 0.5)) {
    throw ConfigError("cutoff_fraction must be in (0, 0.5]");
  }
  if (options.taps_per_phase < 2) throw ConfigError("taps_per_phase must be at least 2");

  // Output sample n sits at input position n * down / up.
  const std::uint64_t g = std::gcd(native_rate, target_rate);
  const std::uint64_t up = target_rate / g;
  const std::uint64_t down = native_rate / g;
  const double ratio = static_cast<double>(native_rate) / target_rate;
  const double cutoff = options.cutoff_fraction / ratio;  // cycles per input sample
  const double half_width = 0.5 * static_cast<double>(options.taps_per_phase) * ratio;
  const long reach = static_cast<long>(std::ceil(half_width));
  const double beta = kaiser_beta(options.stopband_db);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);

  // One table per fractional phase p / up; taps for input offsets -reach..reach.
  const std::size_t width = static_cast<std::size_t>(2 * reach + 1);
  std::vector<std::vector<double>> phases(up, std::vector<double>(width, 0.0));
  for (std::uint64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    double total = 0.0;
    for (long j = -reach; j <= reach; ++j) {
      const double tau = static_cast<double>(j) - frac;
      const double r = tau / half_width;
      if (std::abs(r) > 1.0) continue;
      const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
      const double tap = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * window;
      phases[p][static_cast<std::size_t>(j + reach)] = tap;
      total += tap;
    }
    for (double& t : phases[p]) t /= total;
  }

  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(samples.size()) * target_rate / static_cast<double>(native_rate)));
  std::vector<double> out(n_out, 0.0);
  const long n_in = static_cast<long>(samples.size());
  for (std::size_t n = 0; n < n_out; ++n) {
    const std::uint64_t pos = n * down;
    const long base = static_cast<long>(pos / up);
    const auto& taps = phases[pos % up];
    const long lo = std::max(-reach, -base);
    const long hi = std::min(reach, n_in - 1 - base);
    double acc = 0.0;
    for (long j = lo; j <= hi; ++j) acc += taps[static_cast<std::size_t>(j + reach)] * samples[base + j];
    out[n] = acc;
  }
  return out;
}

}  // namespace ann::data
