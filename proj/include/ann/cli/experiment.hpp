#pragma once

#include "ann/cli/config.hpp"
#include "ann/data/dataset.hpp"

namespace ann::cli {

std::vector<data::ToneClass> synth_classes(const ExperimentConfig& config);
data::SynthOptions synth_options(const ExperimentConfig& config);

/// Builds the train/test split the config asks for: the synthetic tone task,
/// or AudioMNIST from data.manifest / data.root with a speaker-disjoint split.
data::DatasetSplit load_split(const ExperimentConfig& config);

}  // namespace ann::cli
