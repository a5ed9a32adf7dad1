#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ann/data/dataset.hpp"
#include "ann/layers/model.hpp"

namespace ann::train {

enum class DatasetKind { audiomnist_binary, audiomnist_full, synthetic };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

struct TrainConfig {
  layers::ModelSpec model;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double fine_lr = 1e-4;
  std::size_t fine_tune_epochs = 0;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t target_rate = 1000;
  DatasetKind dataset = DatasetKind::synthetic;
  // Verify every weight is in [0, 1] after each optimizer step (constrained models).
  bool check_bounds = false;
};

void validate(const TrainConfig& config);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_acc = 0.0;
  double test_acc = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

using Confusion = std::vector<std::vector<long>>;  // [true][predicted]

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;
  Confusion confusion;  // test set, after the last epoch
  double wall_seconds = 0.0;
  double sparsity = 0.0;
  bool diverged = false;
  std::string divergence;
  std::shared_ptr<layers::Model> model;

  // Last-epoch test accuracy.
  double final_accuracy() const;
};

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
  Confusion confusion;
};

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

Evaluation evaluate(const layers::Model& model, std::span<const data::AudioRecord> records,
                    std::size_t batch_size = 64);

/// Trains a fresh model seeded with config.seed. Throws TrainingDivergence
/// (with epoch, step and gradient norm) when the loss or gradient stops being
/// finite.
RunResult train(const TrainConfig& config, const data::DatasetSplit& split);

struct MultiSeedResult {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over completed runs
  std::size_t completed = 0;
  bool partial = false;  // at least one run diverged
  std::vector<RunResult> runs;
};

/// Runs seeds base + i * seed_stride for i in [0, n_runs). A stride of 0
/// repeats the base seed. Diverged runs are kept (flagged) and excluded from
/// the aggregate.
MultiSeedResult multi_seed(const TrainConfig& config, const data::DatasetSplit& split, std::size_t n_runs = 5,
                           std::uint64_t seed_stride = 1, std::size_t threads = 1);

struct SweepPoint {
  double c = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  std::size_t completed = 0;
};

// U(0, c) initialization for each c, multi_seed with `runs` runs per point.
std::vector<SweepPoint> init_sweep(const TrainConfig& config, const data::DatasetSplit& split,
                                   std::span<const double> c_values, std::size_t runs = 3, std::size_t threads = 1);

struct SparsityReport {
  std::size_t total = 0;
  std::size_t zeros = 0;
  std::size_t out_of_range = 0;  // weights outside [0, 1]; not in the histogram
  double zero_fraction = 0.0;
  std::vector<std::size_t> histogram;  // 50 bins over [0, 1], last bin closed
};

SparsityReport sparsity_report(const layers::Model& model, std::size_t bins = 50);

// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> values);

}  // namespace ann::train
