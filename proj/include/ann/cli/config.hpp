#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ann/train/harness.hpp"

namespace ann::cli {

struct DataConfig {
  std::string root;      // AudioMNIST directory (<root>/<speaker>/*.wav)
  std::string manifest;  // CSV manifest; takes precedence over root
  std::string cache_dir;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  std::size_t threads = 1;
  // Synthetic task
  std::size_t synth_train_per_class = 100;
  std::size_t synth_test_per_class = 50;
  std::uint64_t synth_seed = 1234;
  double synth_snr_db = 30.0;
  double synth_jitter = 0.2;
  double synth_tone_seconds = 0.8;
  // Tone frequencies in Hz per class, several for a chord. Empty: single tones
  // at 5% and 15% of the sample rate.
  std::vector<std::vector<double>> synth_classes;
};

struct ExperimentConfig {
  train::TrainConfig train;
  DataConfig data;
  std::size_t runs = 1;                 // > 1 switches `train` to multi-seed mode
  std::vector<double> sweep_c{0.005, 0.01, 0.03, 0.06, 0.1, 0.2, 0.5, 1.0};
  std::size_t sweep_runs = 3;
};

/// Parses `[section]` headers and `key = value` lines into dotted keys.
/// Values may be bare or double-quoted; `#` starts a comment outside quotes.
std::map<std::string, std::string> parse_toml_subset(std::string_view text);

// Every settable key, in canonical order.
const std::vector<std::string>& config_keys();

/// Applies one dotted key. Unknown keys throw ConfigError listing the valid
/// ones; bad values throw ConfigError naming the key.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});

// Canonical text: every key in canonical order. parse_config(to_toml(c)) == c.
std::string to_toml(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

const std::vector<std::string>& preset_names();
ExperimentConfig preset(std::string_view name);

}  // namespace ann::cli
