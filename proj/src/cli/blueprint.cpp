#include "ann/cli/blueprint.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ann/errors.hpp"

namespace ann::cli {

using nlohmann::json;

double attenuation_db(double w) {
  if (w == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(w);
}

namespace {

struct LayerInfo {
  std::string name;
  std::string kind;
  std::size_t units;
  std::string source;
};

json neuron_layer(const LayerInfo& info, const nn::ActivationSpec& act, std::size_t subsample) {
  json neurons = json::array();
  const std::string kind = std::string(nn::to_string(act.kind));
  const double threshold = act.non_negative() ? act.offset : 0.0;
  for (std::size_t i = 0; i < info.units; ++i) {
    neurons.push_back({{"layer", info.name}, {"index", i}, {"activation", kind}, {"threshold", threshold}});
  }
  json layer{{"name", info.name},
             {"kind", info.kind},
             {"units", info.units},
             {"input", info.source},
             {"activation", {{"kind", kind}, {"threshold", threshold}}},
             {"neurons", std::move(neurons)}};
  if (subsample > 0) layer["subsample_factor"] = subsample;
  return layer;
}

}  // namespace

json export_blueprint(const Checkpoint& checkpoint, const BlueprintOptions& options) {
  const auto& spec = checkpoint.spec;
  if (!spec.constrained && !options.force) {
    throw ContractError(
        "refusing to export an unconstrained model: its weights are not physical transmissions (use --force to "
        "export them verbatim)");
  }
  const layers::Model model = checkpoint.model();
  const bool physical = spec.constrained;
  const nn::ActivationSpec act =
      spec.constrained ? spec.activation : nn::ActivationSpec{nn::ActivationKind::tanh, 0.0};

  json blueprint;
  blueprint["meta"] = {
      {"format", "acoustic-network-blueprint"},
      {"version", 1},
      {"variant", layers::to_string(spec.variant)},
      {"physical", physical},
      {"sample_rate_hz", spec.sample_rate},
      {"n_classes", spec.n_classes},
      {"attenuation_convention", "intensity: attenuation_db = -10*log10(w)"},
      {"readout", "argmax over output intensities (lowest index wins ties)"},
      {"seed", checkpoint.meta.seed},
      {"epochs_completed", checkpoint.meta.epochs_completed},
      {"config_hash", fmt::format("{:016x}", checkpoint.meta.config_hash)},
  };
  if (!physical) blueprint["meta"]["warning"] = "unconstrained model exported with --force; weights are non-physical";

  json filters = json::array();
  if (model.sinc()) {
    const auto& bank = *model.sinc();
    for (std::size_t c = 0; c < bank.channels(); ++c) {
      const auto band = bank.passband(c);
      if (!(band.f_low < band.f_high && band.f_high <= bank.nyquist())) {
        throw IntegrityError(fmt::format("filter {} has an invalid passband [{}, {}] Hz", c, band.f_low, band.f_high));
      }
      filters.push_back({{"channel", c},
                         {"f_low_hz", band.f_low},
                         {"f_high_hz", band.f_high},
                         {"kernel_size", bank.kernel_size},
                         {"window", "hamming"},
                         {"clamped", band.clamped}});
    }
  }
  blueprint["filters"] = std::move(filters);

  // Layer graph: name, kind, width and the layer feeding it.
  json layer_list = json::array();
  std::string source = model.sinc() ? "sinc" : "input";
  std::vector<LayerInfo> recurrent;
  if (model.rnn()) {
    recurrent.push_back({"rnn", "rnn", spec.hidden_sizes[0], source});
    layer_list.push_back(neuron_layer(recurrent.back(), act, 0));
    source = "rnn";
  }
  for (std::size_t i = 0; i < model.hs_layers().size(); ++i) {
    recurrent.push_back({fmt::format("hs{}", i), "hierarchical_subsampling", spec.hidden_sizes[i], source});
    layer_list.push_back(neuron_layer(recurrent.back(), act, spec.subsample_factor));
    source = recurrent.back().name;
  }
  const auto& dense = model.dense_layers();
  std::vector<std::string> dense_source;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const bool output = i + 1 == dense.size();
    const std::string name = output ? "out" : fmt::format("dense{}", i);
    dense_source.push_back(source);
    const LayerInfo info{name, output ? "output" : "dense", dense[i].weight.dim(0), source};
    layer_list.push_back(neuron_layer(info, output ? nn::ActivationSpec{nn::ActivationKind::offset_relu, 0.0} : act, 0));
    if (output) layer_list.back()["activation"] = {{"kind", "linear"}, {"threshold", 0.0}};
    if (output) {
      for (auto& n : layer_list.back()["neurons"]) n["activation"] = "linear";
    }
    source = name;
  }
  blueprint["layers"] = std::move(layer_list);

  json connections = json::array();
  auto emit = [&](const std::string& param, const ad::Tensor& w, const std::string& from, const std::string& to,
                  const json& extra) {
    const std::size_t rows = w.dim(0);
    const std::size_t cols = w.size() / rows;
    const auto values = w.values();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double v = values[i * cols + j];
        if (physical && !(v >= 0.0 && v <= 1.0)) {
          throw IntegrityError(fmt::format("{}[{},{}] = {} is not a transmission in [0, 1]", param, i, j, v));
        }
        json c{{"param", param},
               {"from", fmt::format("{}[{}]", from, j)},
               {"to", fmt::format("{}[{}]", to, i)},
               {"w", v},
               {"prunable", v == 0.0}};
        if (v == 0.0) {
          c["attenuation_db"] = "inf";
        } else if (v > 0.0 && v <= 1.0) {
          c["attenuation_db"] = attenuation_db(v);
        } else {
          c["attenuation_db"] = nullptr;
        }
        c.update(extra);
        connections.push_back(std::move(c));
      }
    }
  };

  std::size_t r = 0;
  if (model.rnn()) {
    const auto& cell = *model.rnn();
    emit("rnn.w_in", cell.w_in, recurrent[r].source, "rnn", json::object());
    emit("rnn.w_rec", cell.w_rec, "rnn", "rnn", {{"delay_steps", 1}});
    ++r;
  }
  for (std::size_t i = 0; i < model.hs_layers().size(); ++i, ++r) {
    const auto& layer = model.hs_layers()[i];
    for (std::size_t j = 0; j < layer.w_pos.size(); ++j) {
      emit(fmt::format("hs{}.w_pos{}", i, j), layer.w_pos[j], recurrent[r].source, recurrent[r].name,
           {{"segment_position", j}});
    }
    emit(fmt::format("hs{}.w_rec", i), layer.w_rec, recurrent[r].name, recurrent[r].name, {{"delay_steps", 1}});
  }
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const bool output = i + 1 == dense.size();
    const std::string name = output ? "out" : fmt::format("dense{}", i);
    emit(name + ".weight", dense[i].weight, dense_source[i], name, json::object());
  }
  blueprint["connections"] = std::move(connections);
  return blueprint;
}

}  // namespace ann::cli
