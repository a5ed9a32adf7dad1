#include "ann/cli/experiment.hpp"

#include <filesystem>

#include <spdlog/spdlog.h>

#include "ann/data/manifest.hpp"
#include "ann/errors.hpp"

namespace ann::cli {

std::vector<data::ToneClass> synth_classes(const ExperimentConfig& config) {
  if (config.data.synth_classes.empty()) return data::default_tone_classes(config.train.target_rate);
  std::vector<data::ToneClass> classes;
  for (const auto& tones : config.data.synth_classes) classes.push_back({tones});
  return classes;
}

data::SynthOptions synth_options(const ExperimentConfig& config) {
  data::SynthOptions o;
  o.target_rate = config.train.target_rate;
  o.seed = config.data.synth_seed;
  o.snr_db = config.data.synth_snr_db;
  o.amplitude_jitter = config.data.synth_jitter;
  o.tone_seconds = config.data.synth_tone_seconds;
  return o;
}

data::DatasetSplit load_split(const ExperimentConfig& config) {
  if (config.train.dataset == train::DatasetKind::synthetic) {
    const auto classes = synth_classes(config);
    if (classes.size() != config.train.model.n_classes) {
      throw ConfigError("synthetic task has " + std::to_string(classes.size()) + " classes but model.n_classes is " +
                        std::to_string(config.train.model.n_classes));
    }
    return data::synth_split(classes, config.data.synth_train_per_class, config.data.synth_test_per_class,
                             synth_options(config));
  }

  namespace fs = std::filesystem;
  std::vector<data::ManifestEntry> entries;
  fs::path base;
  if (!config.data.manifest.empty()) {
    entries = data::read_manifest(config.data.manifest);
    base = fs::path(config.data.manifest).parent_path();
  } else if (!config.data.root.empty() && fs::is_directory(config.data.root)) {
    entries = data::scan_audiomnist(config.data.root);
    base = config.data.root;
  } else {
    throw ConfigError(
        "AudioMNIST data not found. Download it with `git clone https://github.com/soerenab/AudioMNIST` and pass "
        "--data-root AudioMNIST/data (or --manifest a CSV made by `make-manifest`), or use --data synthetic.");
  }
  if (entries.empty()) throw ConfigError("no recordings found for the AudioMNIST dataset");

  data::LoadOptions load;
  load.target_rate = config.train.target_rate;
  load.base_dir = base;
  load.threads = config.data.threads;
  if (!config.data.cache_dir.empty()) load.cache_dir = fs::path(config.data.cache_dir);
  auto records = data::load_records(entries, load);
  if (config.train.dataset == train::DatasetKind::audiomnist_binary) records = data::binary_subset(records);
  for (const auto& r : records) {
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= config.train.model.n_classes) {
      throw ConfigError("record " + r.source_path + " has label " + std::to_string(r.label) +
                        " outside the model's " + std::to_string(config.train.model.n_classes) + " classes");
    }
  }
  auto split = data::speaker_disjoint_split(records, config.data.train_fraction, config.data.split_seed);
  spdlog::info("split: {} train records ({} speakers), {} test records ({} speakers)", split.train.size(),
               split.train_speakers.size(), split.test.size(), split.test_speakers.size());
  return split;
}

}  // namespace ann::cli
