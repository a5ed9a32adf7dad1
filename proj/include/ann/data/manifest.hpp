#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ann/data/dataset.hpp"

namespace ann::data {

struct ManifestEntry {
  std::string path;
  int label = 0;
  int speaker_id = 0;
};

/// Walks `<root>/<speaker>/<digit>_<speaker>_<idx>.wav`. Paths are stored
/// relative to root; output is sorted by path. Files that do not follow the
/// naming scheme are skipped with a warning.
std::vector<ManifestEntry> scan_audiomnist(const std::filesystem::path& root);

// CSV with header `path,label,speaker_id`.
void write_manifest(const std::filesystem::path& file, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);

// Cache file: "AINN", u16 version, u32 rate, u32 length, 2 padding bytes, f32 LE samples.
inline constexpr std::uint16_t kCacheVersion = 1;
std::vector<std::uint8_t> encode_cache(std::span<const double> intensity, std::uint32_t rate);
std::vector<double> decode_cache(std::span<const std::uint8_t> bytes, std::uint32_t expected_rate);

struct LoadOptions {
  std::uint32_t target_rate = 1000;
  std::filesystem::path base_dir;                 // relative manifest paths resolve here
  std::optional<std::filesystem::path> cache_dir;  // read-through cache when set
  std::size_t threads = 1;
};

/// Loads, resamples and preprocesses every manifest entry. Records come back
/// sorted by source_path regardless of thread count.
std::vector<AudioRecord> load_records(std::span<const ManifestEntry> entries, const LoadOptions& options);

}  // namespace ann::data
