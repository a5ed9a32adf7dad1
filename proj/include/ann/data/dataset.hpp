#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ann::data {

struct AudioRecord {
  std::vector<double> intensity;  // target_rate samples in [0, 1]
  int label = 0;
  int speaker_id = 0;
  std::string source_path;
};

struct DatasetSplit {
  std::vector<AudioRecord> train;
  std::vector<AudioRecord> test;
  std::set<int> train_speakers;
  std::set<int> test_speakers;
};

/// Center-crops clips longer than target_rate, zero-pads at the end,
/// peak-normalizes and squares. An all-zero clip stays all-zero.
std::vector<double> preprocess(std::span<const double> samples, std::uint32_t target_rate);

/// Shuffles the distinct speaker ids with a seeded generator and assigns the
/// first round(train_fraction * n) of them (at least one per side) to train.
/// Records keep their input order within each side.
DatasetSplit speaker_disjoint_split(std::span<const AudioRecord> records, double train_fraction, std::uint64_t seed);

std::vector<AudioRecord> binary_subset(std::span<const AudioRecord> records);

struct ToneClass {
  std::vector<double> frequencies_hz;  // one tone, or several for a chord
};

struct SynthOptions {
  std::size_t n_per_class = 50;
  std::uint32_t target_rate = 2000;
  std::uint64_t seed = 0;
  double amplitude_jitter = 0.2;  // relative, uniform in [1 - j, 1 + j]
  double snr_db = 30.0;           // infinite or negative disables noise
  bool noise = true;
  double tone_seconds = 0.8;      // tone support; onset drawn uniformly in the remainder
  int n_speakers = 10;
  int speaker_offset = 0;
};

struct SynthClip {
  std::vector<double> wave;  // raw waveform, target_rate samples
  int label = 0;
  int speaker_id = 0;
};

/// Tapered tones with random phase and onset. Clips are emitted
/// class-interleaved, speakers assigned round-robin from speaker_offset.
std::vector<SynthClip> synth_clips(std::span<const ToneClass> classes, const SynthOptions& options);

// synth_clips() passed through preprocess().
std::vector<AudioRecord> synth_dataset(std::span<const ToneClass> classes, const SynthOptions& options);

// Two single-tone classes at 5% and 15% of the sample rate.
std::vector<ToneClass> default_tone_classes(std::uint32_t target_rate);

/// Synthetic train/test pair with disjoint pseudo-speakers: the test half
/// uses speaker ids starting after the train ids and an independent stream.
DatasetSplit synth_split(std::span<const ToneClass> classes, std::size_t train_per_class, std::size_t test_per_class,
                         const SynthOptions& base);

}  // namespace ann::data
