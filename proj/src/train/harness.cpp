#include "ann/train/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ann/autodiff/ops.hpp"
#include "ann/errors.hpp"
#include "ann/optim/adam.hpp"

namespace ann::train {

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::audiomnist_binary: return "audiomnist-binary";
    case DatasetKind::audiomnist_full: return "audiomnist-full";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  for (auto k : {DatasetKind::audiomnist_binary, DatasetKind::audiomnist_full, DatasetKind::synthetic})
    if (to_string(k) == name) return k;
  throw ConfigError(fmt::format("unknown dataset '{}' (valid: audiomnist-binary, audiomnist-full, synthetic)", name));
}

void validate(const TrainConfig& config) {
  layers::validate(config.model);
  if (config.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (config.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (config.fine_tune_epochs > config.epochs) throw ConfigError("fine_tune_epochs exceeds epochs");
  if (!(config.lr >= 0.0) || !(config.fine_lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
  if (!(config.max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
  if (static_cast<double>(config.target_rate) != config.model.sample_rate) {
    throw ConfigError(fmt::format("model sample rate {} Hz does not match target rate {} Hz", config.model.sample_rate,
                                  config.target_rate));
  }
}

double RunResult::final_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().test_acc; }

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

namespace {

ad::Tensor stack_batch(std::span<const data::AudioRecord> records, std::span<const std::size_t> indices,
                       std::vector<int>& labels) {
  const std::size_t length = records[indices[0]].intensity.size();
  ad::Tensor batch(ad::Shape{indices.size(), length});
  auto values = batch.values();
  labels.clear();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& r = records[indices[b]];
    if (r.intensity.size() != length) {
      throw DimensionError(fmt::format("record {} has {} samples, batch expects {}", r.source_path,
                                       r.intensity.size(), length));
    }
    std::copy(r.intensity.begin(), r.intensity.end(), values.begin() + static_cast<std::ptrdiff_t>(b * length));
    labels.push_back(r.label);
  }
  return batch;
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

void check_weight_bounds(const layers::Model& model, std::size_t epoch, std::size_t step) {
  for (const auto& p : model.parameters()) {
    if (p.role != layers::ParamRole::weight) continue;
    for (double v : p.tensor.values()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ContractError(fmt::format("weight {} = {} left [0, 1] after epoch {} step {}", p.name, v, epoch, step));
      }
    }
  }
}

}  // namespace

Evaluation evaluate(const layers::Model& model, std::span<const data::AudioRecord> records, std::size_t batch_size) {
  if (records.empty()) throw ContractError("evaluate() needs at least one record");
  const std::size_t n_classes = model.spec().n_classes;
  Evaluation ev;
  ev.confusion.assign(n_classes, std::vector<long>(n_classes, 0));
  std::vector<std::size_t> indices(records.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<int> labels;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + batch_size);
    const ad::Tensor batch = stack_batch(records, std::span(indices).subspan(start, end - start), labels);
    ad::Graph g(ad::Graph::Mode::inference);
    const ad::Tensor logits = model.forward(g, batch);
    loss_sum += ad::softmax_cross_entropy(g, logits, labels).item() * static_cast<double>(end - start);
    const auto lv = logits.values();
    for (std::size_t b = 0; b < labels.size(); ++b) {
      const std::size_t pred = argmax(lv.subspan(b * n_classes, n_classes));
      ++ev.confusion[static_cast<std::size_t>(labels[b])][pred];
      if (pred == static_cast<std::size_t>(labels[b])) ++correct;
    }
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  ev.loss = loss_sum / static_cast<double>(records.size());
  return ev;
}

RunResult train(const TrainConfig& config, const data::DatasetSplit& split) {
  validate(config);
  if (split.train.empty() || split.test.empty()) throw ContractError("train() needs non-empty train and test sets");
  const auto started = std::chrono::steady_clock::now();

  auto model = std::make_shared<layers::Model>(layers::Model::create(config.model, config.seed));
  auto trainable = model->trainable();
  auto weights = model->weights();
  optim::AdamState adam(optim::AdamConfig{config.lr});
  optim::StepOptions step_opts;
  step_opts.max_grad_norm = config.max_grad_norm;
  step_opts.constrained = config.model.constrained;
  const optim::StepGroups groups{trainable, weights};

  RunResult result;
  result.seed = config.seed;
  result.model = model;
  std::mt19937_64 rng(config.seed ^ 0xA5A5A5A55A5A5A5AULL);
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    adam.config.lr = optim::lr_schedule(epoch, config.epochs, config.fine_tune_epochs, config.lr, config.fine_lr);
    shuffle(order, rng);
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const ad::Tensor batch = stack_batch(split.train, std::span(order).subspan(start, end - start), labels);
      ad::Graph g;
      const ad::Tensor loss = ad::softmax_cross_entropy(g, model->forward(g, batch), labels);
      model->zero_grad();
      g.backward(loss);
      const double grad_norm = optim::global_grad_norm(trainable);
      if (!std::isfinite(loss.item()) || !std::isfinite(grad_norm)) {
        throw TrainingDivergence(fmt::format("training diverged at epoch {} step {}: loss {}, gradient norm {}",
                                             epoch + 1, step, loss.item(), grad_norm));
      }
      optim::constrained_step(adam, groups, step_opts);
      if (config.check_bounds && config.model.constrained) check_weight_bounds(*model, epoch + 1, step);
    }

    const Evaluation train_ev = evaluate(*model, split.train, config.batch_size);
    const Evaluation test_ev = evaluate(*model, split.test, config.batch_size);
    result.epochs.push_back({epoch + 1, train_ev.accuracy, test_ev.accuracy, train_ev.loss, test_ev.loss});
    result.confusion = test_ev.confusion;
    spdlog::info("seed {} epoch {}/{}: train acc {:.4f} loss {:.4f}, test acc {:.4f} loss {:.4f}", config.seed,
                 epoch + 1, config.epochs, train_ev.accuracy, train_ev.loss, test_ev.accuracy, test_ev.loss);
  }
  result.sparsity = sparsity_report(*model).zero_fraction;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MultiSeedResult multi_seed(const TrainConfig& config, const data::DatasetSplit& split, std::size_t n_runs,
                           std::uint64_t seed_stride, std::size_t threads) {
  if (n_runs < 2) throw ConfigError("multi_seed needs at least 2 runs");
  validate(config);
  MultiSeedResult out;
  out.runs.resize(n_runs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      TrainConfig run_cfg = config;
      run_cfg.seed = config.seed + i * seed_stride;
      try {
        out.runs[i] = train(run_cfg, split);
      } catch (const TrainingDivergence& e) {
        spdlog::warn("run {} (seed {}) diverged: {}", i, run_cfg.seed, e.what());
        RunResult failed;
        failed.seed = run_cfg.seed;
        failed.diverged = true;
        failed.divergence = e.what();
        out.runs[i] = std::move(failed);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::clamp<std::size_t>(threads, 1, n_runs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<double> accs;
  for (const auto& r : out.runs) {
    if (r.diverged) {
      out.partial = true;
    } else {
      accs.push_back(r.final_accuracy());
    }
  }
  out.completed = accs.size();
  if (!accs.empty()) out.mean = std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
  out.std = sample_std(accs);
  return out;
}

std::vector<SweepPoint> init_sweep(const TrainConfig& config, const data::DatasetSplit& split,
                                   std::span<const double> c_values, std::size_t runs, std::size_t threads) {
  if (!config.model.constrained) throw ContractError("init_sweep applies to constrained models only");
  std::vector<SweepPoint> points;
  for (double c : c_values) {
    TrainConfig cfg = config;
    cfg.model.init = {nn::InitKind::uniform_nonneg, c};
    const MultiSeedResult ms = multi_seed(cfg, split, runs, 1, threads);
    points.push_back({c, ms.mean, ms.std, ms.completed});
    spdlog::info("init sweep c={}: mean {:.4f} std {:.4f} ({} runs)", c, ms.mean, ms.std, ms.completed);
  }
  return points;
}

SparsityReport sparsity_report(const layers::Model& model, std::size_t bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  SparsityReport report;
  report.histogram.assign(bins, 0);
  for (const auto& p : model.parameters()) {
    if (p.role != layers::ParamRole::weight) continue;
    for (double v : p.tensor.values()) {
      ++report.total;
      if (v == 0.0) ++report.zeros;
      if (!(v >= 0.0 && v <= 1.0)) {
        ++report.out_of_range;
        continue;
      }
      const auto bin = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
      ++report.histogram[bin];
    }
  }
  report.zero_fraction = report.total ? static_cast<double>(report.zeros) / static_cast<double>(report.total) : 0.0;
  return report;
}

}  // namespace ann::train
