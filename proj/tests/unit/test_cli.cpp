#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "ann/cli/blueprint.hpp"
#include "ann/cli/checkpoint.hpp"
#include "ann/cli/config.hpp"
#include "ann/errors.hpp"

using namespace ann;
using nlohmann::json;

namespace {

layers::ModelSpec small_rnn() {
  layers::ModelSpec spec;
  spec.hidden_sizes = {3};
  return spec;
}

layers::ModelSpec small_sinc() {
  layers::ModelSpec spec;
  spec.variant = layers::Variant::sinc_hsrnn;
  spec.hidden_sizes = {4, 8, 16};
  spec.dense_sizes = {16, 8};
  spec.sample_rate = 2000.0;
  spec.activation = {nn::ActivationKind::offset_abs, 0.2};
  spec.init = {nn::InitKind::abs_xavier_uniform, 0.5};
  return spec;
}

std::vector<double> logits(const layers::Model& model, const ad::Tensor& x) {
  ad::Graph g(ad::Graph::Mode::inference);
  const auto y = model.forward(g, x);
  return {y.values().begin(), y.values().end()};
}

ad::Tensor random_input(std::size_t batch, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(batch * length);
  for (double& x : v) x = u(rng);
  return ad::Tensor(ad::Shape{batch, length}, v);
}

const json& connection(const json& blueprint, const std::string& param, const std::string& from,
                       const std::string& to) {
  for (const auto& c : blueprint["connections"])
    if (c["param"] == param && c["from"] == from && c["to"] == to) return c;
  throw std::runtime_error("connection not found");
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("sections, quotes and comments") {
    const auto kv = cli::parse_toml_subset(
        "# header\n[model]\nvariant = \"hsrnn\"  # trailing\nhidden_sizes = \"4-8-16\"\n\n[train]\nepochs=3\n"
        "lr = 0.01\n");
    CHECK(kv.at("model.variant") == "hsrnn");
    CHECK(kv.at("model.hidden_sizes") == "4-8-16");
    CHECK(kv.at("train.epochs") == "3");
    CHECK(kv.at("train.lr") == "0.01");
  }
  SUBCASE("values reach the typed config") {
    const auto c = cli::parse_config(
        "[model]\nvariant = \"hsrnn\"\nhidden_sizes = \"4-8-16\"\ndense_sizes = \"16\"\n[train]\nepochs = 3\n"
        "[data]\nsynth_classes = \"50,50+70\"\n");
    CHECK(c.train.model.variant == layers::Variant::hsrnn);
    CHECK(c.train.model.hidden_sizes == std::vector<std::size_t>{4, 8, 16});
    CHECK(c.train.epochs == 3);
    REQUIRE(c.data.synth_classes.size() == 2);
    CHECK(c.data.synth_classes[0] == std::vector<double>{50.0});
    CHECK(c.data.synth_classes[1] == std::vector<double>{50.0, 70.0});
  }
  SUBCASE("unknown key names the key and the valid options") {
    try {
      cli::parse_config("[train]\nepoch = 3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("train.epoch") != std::string::npos);
      CHECK(msg.find("train.epochs") != std::string::npos);
    }
  }
  SUBCASE("bad values name the key") {
    cli::ExperimentConfig c;
    try {
      cli::apply_setting(c, "train.batch_size", "many");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("train.batch_size") != std::string::npos);
    }
    CHECK_THROWS_AS(cli::apply_setting(c, "model.activation", "sigmoid"), ConfigError);
    CHECK_THROWS_AS(cli::apply_setting(c, "data.synth_classes", "50,+"), ConfigError);
  }
  SUBCASE("canonical text round-trips for every preset") {
    for (const auto& name : cli::preset_names()) {
      const auto c = cli::preset(name);
      const auto text = cli::to_toml(c);
      CHECK(cli::to_toml(cli::parse_config(text)) == text);
      CHECK(cli::config_hash(cli::parse_config(text)) == cli::config_hash(c));
    }
    CHECK_THROWS_AS(cli::preset("no-such-preset"), ConfigError);
  }
  SUBCASE("hash is stable and sensitive") {
    auto c = cli::preset("desk-hsrnn-1k");
    const auto h = cli::config_hash(c);
    CHECK(cli::config_hash(cli::preset("desk-hsrnn-1k")) == h);
    cli::apply_setting(c, "train.seed", "1");
    CHECK(cli::config_hash(c) != h);
  }
}

TEST_CASE("constrained SincHSRNN 8 kHz preset values") {
  const auto c = cli::preset("sinchsrnn-8k-constrained");
  const auto& m = c.train.model;
  CHECK(m.variant == layers::Variant::sinc_hsrnn);
  CHECK(m.constrained);
  CHECK(c.train.epochs >= 60);
  CHECK(c.train.epochs <= 95);
  CHECK(c.train.fine_tune_epochs == 10);
  CHECK(c.train.lr == 1e-3);
  CHECK(c.train.fine_lr == 1e-4);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.max_grad_norm == 1.0);
  CHECK(m.sinc.kernel_size == 101);
  CHECK(m.sinc.channels == 5);
  CHECK(m.subsample_factor == 8);
  CHECK(m.init.kind == nn::InitKind::abs_xavier_uniform);
  CHECK(m.init.scale == 0.13);
  CHECK(m.activation.kind == nn::ActivationKind::offset_abs);
  CHECK(m.activation.offset >= 0.9);
  CHECK(m.activation.offset <= 1.0);
  CHECK(m.hidden_sizes == std::vector<std::size_t>{8, 16, 32, 64});
  CHECK(c.train.target_rate == 8000);
  CHECK(m.sample_rate == 8000.0);
  for (const auto& name : cli::preset_names()) CHECK_NOTHROW(train::validate(cli::preset(name).train));
}

TEST_CASE("checkpoint round trip") {
  for (const auto& spec : {small_rnn(), small_sinc()}) {
    const auto model = layers::Model::create(spec, 5);
    cli::CheckpointMeta meta{5, 12, 0xDEADBEEFCAFEF00DULL, "desk"};
    const auto bytes = cli::encode_checkpoint(cli::make_checkpoint(model, meta));
    const auto back = cli::decode_checkpoint(bytes);
    CHECK(back.meta.seed == 5);
    CHECK(back.meta.epochs_completed == 12);
    CHECK(back.meta.config_hash == 0xDEADBEEFCAFEF00DULL);
    CHECK(back.meta.preset == "desk");
    CHECK(cli::spec_to_json(back.spec) == cli::spec_to_json(spec));
    CHECK(cli::encode_checkpoint(back) == bytes);

    const auto loaded = back.model();
    const auto x = random_input(3, static_cast<std::size_t>(spec.sample_rate / 4), 6);
    const auto a = logits(model, x), b = logits(loaded, x);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::bit_cast<std::uint64_t>(a[i]) == std::bit_cast<std::uint64_t>(b[i]));
  }
}

TEST_CASE("checkpoint corruption") {
  const auto bytes = cli::encode_checkpoint(cli::make_checkpoint(layers::Model::create(small_rnn(), 0), {}));
  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(cli::decode_checkpoint(bad), ParseError);
  }
  SUBCASE("every truncation is a parse error") {
    for (std::size_t n = 0; n < bytes.size(); ++n)
      CHECK_THROWS_AS(cli::decode_checkpoint(std::span(bytes).first(n)), ParseError);
  }
  SUBCASE("trailing bytes") {
    auto longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(cli::decode_checkpoint(longer), ParseError);
  }
  SUBCASE("unknown version") {
    auto bad = bytes;
    bad[4] = 99;
    CHECK_THROWS_AS(cli::decode_checkpoint(bad), FormatError);
  }
  SUBCASE("parameter table that does not match the spec") {
    auto c = cli::decode_checkpoint(bytes);
    c.parameters.pop_back();
    CHECK_THROWS_AS(c.model(), StructuralError);
  }
  SUBCASE("values that do not fit float32 are refused on save") {
    auto c = cli::decode_checkpoint(bytes);
    c.parameters[0].second.values()[0] = 0.1;
    CHECK_THROWS_AS(cli::encode_checkpoint(c), IntegrityError);
  }
}

TEST_CASE("attenuation") {
  CHECK(cli::attenuation_db(1.0) == 0.0);
  CHECK(cli::attenuation_db(0.1) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(cli::attenuation_db(0.01) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(std::isinf(cli::attenuation_db(0.0)));
}

TEST_CASE("blueprint export") {
  auto model = layers::Model::create(small_rnn(), 1);
  auto w_in = model.rnn()->w_in;
  w_in.values()[0] = 1.0;
  w_in.values()[1] = 0.1;
  w_in.values()[2] = 0.0;
  const auto checkpoint = cli::make_checkpoint(model, {});
  const auto bp = cli::export_blueprint(checkpoint);

  const auto& full = connection(bp, "rnn.w_in", "input[0]", "rnn[0]");
  CHECK(full["attenuation_db"].get<double>() == 0.0);
  CHECK_FALSE(full["prunable"].get<bool>());
  const auto& tenth = connection(bp, "rnn.w_in", "input[0]", "rnn[1]");
  CHECK(tenth["attenuation_db"].get<double>() == doctest::Approx(10.0));
  const auto& zero = connection(bp, "rnn.w_in", "input[0]", "rnn[2]");
  CHECK(zero["attenuation_db"] == "inf");
  CHECK(zero["prunable"].get<bool>());

  std::size_t weights = 0;
  for (const auto& w : model.weights()) weights += w.size();
  CHECK(bp["connections"].size() == weights);
  CHECK(bp["meta"]["physical"].get<bool>());
  CHECK(bp["filters"].empty());
  for (const auto& c : bp["connections"]) {
    const double w = c["w"].get<double>();
    CHECK((w >= 0.0 && w <= 1.0));
  }

  SUBCASE("recurrent connections carry a one-step delay") {
    CHECK(connection(bp, "rnn.w_rec", "rnn[0]", "rnn[1]")["delay_steps"] == 1);
  }
  SUBCASE("sinc filters list valid passbands") {
    const auto sinc = cli::export_blueprint(cli::make_checkpoint(layers::Model::create(small_sinc(), 2), {}));
    REQUIRE(sinc["filters"].size() == 5);
    for (const auto& f : sinc["filters"]) {
      CHECK(f["f_low_hz"].get<double>() < f["f_high_hz"].get<double>());
      CHECK(f["f_high_hz"].get<double>() <= 1000.0);
      CHECK(f["kernel_size"] == 101);
    }
  }
  SUBCASE("unconstrained models are refused unless forced") {
    auto spec = small_rnn();
    spec.constrained = false;
    spec.activation = {nn::ActivationKind::tanh, 0.0};
    spec.init = {nn::InitKind::xavier_uniform, 1.0};
    const auto c = cli::make_checkpoint(layers::Model::create(spec, 0), {});
    CHECK_THROWS_AS(cli::export_blueprint(c), ContractError);
    const auto forced = cli::export_blueprint(c, {.force = true});
    CHECK_FALSE(forced["meta"]["physical"].get<bool>());
    CHECK(forced["meta"].contains("warning"));
  }
  SUBCASE("out-of-range weight is an integrity error") {
    auto c = checkpoint;
    c.parameters[0].second = c.parameters[0].second.clone();
    for (auto& [name, t] : c.parameters)
      if (name == "rnn.w_in") t.values()[0] = 1.5;
    CHECK_THROWS_AS(cli::export_blueprint(c), IntegrityError);
  }
}
