#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ann::data {

struct ResamplerOptions {
  // Low-pass cutoff as a fraction of the target rate.
  double cutoff_fraction = 0.45;
  // Filter taps per polyphase branch, measured at the output rate.
  std::size_t taps_per_phase = 64;
  // Kaiser window design attenuation in dB.
  double stopband_db = 70.0;
};

/// Band-limited rational-ratio downsampler (Kaiser-windowed sinc, polyphase).
/// Output length is round(N * target / native). Equal rates return the input
/// unchanged; upsampling is a ConfigError.
std::vector<double> resample(std::span<const double> samples, std::uint32_t native_rate, std::uint32_t target_rate,
                             const ResamplerOptions& options = {});

}  // namespace ann::data
