#include <doctest.h>

#include <cmath>
#include <random>

#include "ann/data/dataset.hpp"
#include "ann/errors.hpp"
#include "ann/nn/init.hpp"
#include "ann/train/harness.hpp"

using namespace ann;

namespace {

data::DatasetSplit tone_split(std::size_t train_per_class = 100, std::size_t test_per_class = 50) {
  data::SynthOptions opts;
  opts.target_rate = 1000;
  opts.seed = 1234;
  const auto classes = data::default_tone_classes(1000);
  return data::synth_split(classes, train_per_class, test_per_class, opts);
}

train::TrainConfig hsrnn_config() {
  train::TrainConfig c;
  c.model.variant = layers::Variant::hsrnn;
  c.model.hidden_sizes = {4, 8, 16};
  c.model.dense_sizes = {16};
  c.model.activation = {nn::ActivationKind::offset_abs, 0.05};
  c.model.init = {nn::InitKind::uniform_nonneg, 0.05};
  c.epochs = 15;
  c.batch_size = 16;
  c.lr = 3e-3;
  return c;
}

std::vector<double> flat_parameters(const layers::Model& model) {
  std::vector<double> out;
  for (const auto& p : model.parameters()) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

long trace(const train::Confusion& c) {
  long t = 0;
  for (std::size_t i = 0; i < c.size(); ++i) t += c[i][i];
  return t;
}

long total(const train::Confusion& c) {
  long t = 0;
  for (const auto& row : c)
    for (long v : row) t += v;
  return t;
}

}  // namespace

TEST_CASE("argmax") {
  CHECK(train::argmax(std::vector<double>{0.1, 0.7, 0.2}) == 1);
  CHECK(train::argmax(std::vector<double>{1.0, 3.0, 3.0}) == 1);
  CHECK(train::argmax(std::vector<double>{2.0, 2.0}) == 0);
  SUBCASE("property: invariant under positive rescaling") {
    std::mt19937_64 rng(50);
    std::uniform_real_distribution<double> u(-5.0, 5.0), scale(1e-6, 1e6);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> row(2 + trial % 9);
      for (double& v : row) v = u(rng);
      const auto before = train::argmax(row);
      const double s = scale(rng);
      for (double& v : row) v *= s;
      CHECK(train::argmax(row) == before);
    }
  }
}

TEST_CASE("sample standard deviation") {
  CHECK(train::sample_std(std::vector<double>{}) == 0.0);
  CHECK(train::sample_std(std::vector<double>{0.7}) == 0.0);
  CHECK(train::sample_std(std::vector<double>{1.0, 3.0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(train::sample_std(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("evaluate") {
  SUBCASE("untrained 10-class model on balanced data is at chance") {
    std::vector<data::ToneClass> classes;
    for (int k = 0; k < 10; ++k) classes.push_back({{40.0 + 40.0 * k}});
    data::SynthOptions opts;
    opts.target_rate = 1000;
    opts.n_per_class = 30;
    const auto records = data::synth_dataset(classes, opts);
    layers::ModelSpec spec;
    spec.n_classes = 10;
    const auto model = layers::Model::create(spec, 0);
    const auto e = train::evaluate(model, records);
    CHECK(std::abs(e.accuracy - 0.1) <= 0.03);
    CHECK(static_cast<double>(trace(e.confusion)) / static_cast<double>(total(e.confusion)) == e.accuracy);
    for (const auto& row : e.confusion) {
      long n = 0;
      for (long v : row) n += v;
      CHECK(n == 30);
    }
  }
  SUBCASE("is side-effect free") {
    const auto split = tone_split(5, 10);
    const auto model = layers::Model::create(hsrnn_config().model, 3);
    const auto params = flat_parameters(model);
    const auto a = train::evaluate(model, split.test, 4);
    const auto b = train::evaluate(model, split.test, 7);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    CHECK(a.confusion == b.confusion);
    CHECK(flat_parameters(model) == params);
  }
  SUBCASE("empty input") {
    const auto model = layers::Model::create(hsrnn_config().model, 0);
    CHECK_THROWS(train::evaluate(model, {}));
  }
}

TEST_CASE("train") {
  const auto split = tone_split();
  SUBCASE("lr = 0 for one full-batch epoch changes nothing") {
    auto config = hsrnn_config();
    config.epochs = 1;
    config.batch_size = split.train.size();
    config.lr = 0.0;
    config.fine_lr = 0.0;
    const auto result = train::train(config, split);
    const auto fresh = layers::Model::create(config.model, config.seed);
    CHECK(flat_parameters(*result.model) == flat_parameters(fresh));
    CHECK(result.final_accuracy() == train::evaluate(fresh, split.test).accuracy);
  }
  SUBCASE("same seed twice gives identical metrics") {
    auto config = hsrnn_config();
    config.epochs = 3;
    config.seed = 11;
    const auto a = train::train(config, split);
    const auto b = train::train(config, split);
    REQUIRE(a.epochs.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
      CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
      CHECK(a.epochs[e].test_loss == b.epochs[e].test_loss);
      CHECK(a.epochs[e].test_acc == b.epochs[e].test_acc);
    }
    CHECK(flat_parameters(*a.model) == flat_parameters(*b.model));
  }
  SUBCASE("constrained HSRNN learns the tones with bounds checked every step") {
    auto config = hsrnn_config();
    config.check_bounds = true;
    const auto result = train::train(config, split);
    CHECK(result.final_accuracy() >= 0.95);
    CHECK(result.epochs.size() == 15);
    CHECK(result.epochs.back().epoch == 15);
    // A perfect classifier gives a diagonal confusion matrix.
    if (result.final_accuracy() == 1.0) {
      CHECK(result.confusion[0][1] == 0);
      CHECK(result.confusion[1][0] == 0);
      CHECK(result.confusion[0][0] == 50);
      CHECK(result.confusion[1][1] == 50);
    }
    for (const auto& w : result.model->weights())
      for (double v : w.values()) REQUIRE((v >= 0.0 && v <= 1.0));
  }
  SUBCASE("invalid configs") {
    auto config = hsrnn_config();
    config.batch_size = 0;
    CHECK_THROWS_AS(train::validate(config), ConfigError);
    config = hsrnn_config();
    config.epochs = 0;
    CHECK_THROWS_AS(train::validate(config), ConfigError);
  }
}

// Readout of the final hidden state sees the tail of each clip, which is
// silence after the taper; the RNN does not carry class information there.
TEST_CASE("constrained RNN H=8 on two synthetic tones at 1 kHz" * doctest::may_fail()) {
  train::TrainConfig config;
  config.epochs = 10;
  config.batch_size = 16;
  const auto result = train::train(config, tone_split());
  CHECK(result.final_accuracy() >= 0.95);
}

TEST_CASE("multi_seed") {
  const auto split = tone_split(20, 10);
  auto config = hsrnn_config();
  config.epochs = 2;
  SUBCASE("stride 0 repeats the seed, so std is 0") {
    const auto r = train::multi_seed(config, split, 3, 0);
    CHECK(r.completed == 3);
    CHECK(r.std == 0.0);
    CHECK_FALSE(r.partial);
  }
  SUBCASE("seeds are base + i * stride and the mean matches the runs") {
    config.seed = 100;
    const auto r = train::multi_seed(config, split, 3, 5, 2);
    REQUIRE(r.runs.size() == 3);
    double mean = 0.0;
    std::vector<double> accs;
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.runs[i].seed == 100 + 5 * i);
      accs.push_back(r.runs[i].final_accuracy());
      mean += accs.back() / 3.0;
    }
    CHECK(r.mean == doctest::Approx(mean));
    CHECK(r.std == doctest::Approx(train::sample_std(accs)));
    const auto serial = train::multi_seed(config, split, 3, 5, 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(serial.runs[i].final_accuracy() == r.runs[i].final_accuracy());
  }
}

TEST_CASE("init sweep: small c trains, c = 1 saturates to chance") {
  const auto split = tone_split();
  const std::vector<double> cs{0.05, 1.0};
  const auto points = train::init_sweep(hsrnn_config(), split, cs, 2);
  REQUIRE(points.size() == 2);
  CHECK(points[0].c == 0.05);
  CHECK(points[1].c == 1.0);
  CHECK(points[0].mean_acc >= 0.9);
  CHECK(points[1].mean_acc <= 0.6);
}

TEST_CASE("sparsity report") {
  auto spec = hsrnn_config().model;
  SUBCASE("fresh U(0, c) init has no exact zeros") {
    const auto model = layers::Model::create(spec, 0);
    const auto r = train::sparsity_report(model);
    CHECK(r.zero_fraction == 0.0);
    CHECK(r.out_of_range == 0);
    std::size_t counted = 0;
    for (auto n : r.histogram) counted += n;
    CHECK(counted == r.total);
    CHECK(r.histogram.size() == 50);
  }
  SUBCASE("weights projected from negatives are all zero") {
    auto model = layers::Model::create(spec, 0);
    auto weights = model.weights();
    for (auto& w : weights)
      for (double& v : w.values()) v = -std::abs(v) - 0.1;
    nn::project_unit_interval(weights);
    const auto r = train::sparsity_report(model);
    CHECK(r.zero_fraction == 1.0);
    CHECK(r.zeros == r.total);
    CHECK(r.histogram.front() == r.total);
  }
  SUBCASE("value 1 lands in the closed last bin") {
    auto model = layers::Model::create(spec, 0);
    auto weights = model.weights();
    for (auto& w : weights)
      for (double& v : w.values()) v = 1.0;
    CHECK(train::sparsity_report(model).histogram.back() == train::sparsity_report(model).total);
  }
}
