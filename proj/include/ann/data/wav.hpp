#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ann::data {

struct WavAudio {
  std::vector<double> samples;  // mono, scaled to [-1, 1]
  std::uint32_t sample_rate = 0;
};

/// Reads RIFF/WAVE: PCM 8/16/24/32-bit integer or 32-bit IEEE float. Channels
/// are averaged to mono. Integer samples are divided by their full-scale value
/// (16384 -> 0.5 for 16-bit).
WavAudio parse_wav(std::span<const std::uint8_t> bytes);
WavAudio load_wav(const std::filesystem::path& path);

// 16-bit PCM mono, values clipped to [-1, 1].
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> samples, std::uint32_t sample_rate);
void save_wav_pcm16(const std::filesystem::path& path, std::span<const double> samples, std::uint32_t sample_rate);

}  // namespace ann::data
