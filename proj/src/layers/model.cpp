#include "ann/layers/model.hpp"

#include <charconv>
#include <string>

#include "ann/autodiff/ops.hpp"
#include "ann/errors.hpp"

namespace ann::layers {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::rnn: return "rnn";
    case Variant::hsrnn: return "hsrnn";
    case Variant::sinc_hsrnn: return "sinc_hsrnn";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "rnn") return Variant::rnn;
  if (name == "hsrnn") return Variant::hsrnn;
  if (name == "sinc_hsrnn") return Variant::sinc_hsrnn;
  throw ConfigError("unknown model variant '" + std::string(name) + "' (valid: rnn, hsrnn, sinc_hsrnn)");
}

std::vector<std::size_t> parse_sizes(std::string_view text) {
  std::vector<std::size_t> sizes;
  if (text.empty()) return sizes;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t dash = std::min(text.find('-', pos), text.size());
    const std::string_view part = text.substr(pos, dash - pos);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size() || value == 0) {
      throw ConfigError("bad layer size list '" + std::string(text) + "' (expected e.g. 8-16-32)");
    }
    sizes.push_back(value);
    pos = dash + 1;
  }
  return sizes;
}

std::string format_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += '-';
    out += std::to_string(sizes[i]);
  }
  return out;
}

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::weight: return "weight";
    case ParamRole::bias: return "bias";
    case ParamRole::frequency: return "frequency";
    case ParamRole::state: return "state";
  }
  return "unknown";
}

void validate(const ModelSpec& spec) {
  if (spec.hidden_sizes.empty()) throw ConfigError("model needs at least one hidden size");
  for (auto h : spec.hidden_sizes)
    if (h == 0) throw ConfigError("hidden sizes must be positive");
  for (auto d : spec.dense_sizes)
    if (d == 0) throw ConfigError("dense sizes must be positive");
  if (spec.n_classes < 2) throw ConfigError("n_classes must be at least 2");
  if (!(spec.sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
  if (spec.constrained && !spec.activation.non_negative()) {
    throw ConfigError("constrained models need a non-negative activation (offset_relu or offset_abs), got " +
                      std::string(nn::to_string(spec.activation.kind)));
  }
  if (spec.activation.non_negative() && spec.activation.offset < 0.0) {
    throw ConfigError("activation offset must be >= 0");
  }
  if (!(spec.h0_scale > 0.0)) throw ConfigError("h0_scale must be positive");
  nn::validate(spec.init);
  switch (spec.variant) {
    case Variant::rnn:
      if (spec.hidden_sizes.size() != 1) {
        throw ConfigError("rnn has a single recurrent layer, got hidden sizes " + format_sizes(spec.hidden_sizes));
      }
      if (!spec.dense_sizes.empty()) throw ConfigError("rnn maps h_T straight to the logits; dense_sizes must be empty");
      break;
    case Variant::hsrnn:
    case Variant::sinc_hsrnn: {
      if (spec.hidden_sizes.size() < 3) {
        throw ConfigError(std::string(to_string(spec.variant)) + " needs at least 3 recurrent layers, got " +
                          format_sizes(spec.hidden_sizes));
      }
      if (spec.subsample_factor == 0) throw ConfigError("subsample_factor must be positive");
      const std::size_t want = spec.variant == Variant::hsrnn ? 1 : 2;
      if (spec.dense_sizes.size() != want) {
        throw ConfigError(std::string(to_string(spec.variant)) + " needs " + std::to_string(want) +
                          " dense layer size(s), got '" + format_sizes(spec.dense_sizes) + "'");
      }
      break;
    }
  }
  if (spec.variant == Variant::sinc_hsrnn) {
    if (spec.sinc.kernel_size % 2 == 0) throw ConfigError("sinc kernel_size must be odd");
    if (spec.sinc.channels == 0) throw ConfigError("sinc channels must be positive");
  }
}

void Model::build_skeleton() {
  validate(spec_);
  const bool bias = spec_.has_bias();
  const nn::ActivationSpec act =
      spec_.constrained ? spec_.activation : nn::ActivationSpec{nn::ActivationKind::tanh, 0.0};
  auto weight = [](ad::Shape s) { return ad::Tensor(std::move(s), true); };

  std::size_t features = 1;
  if (spec_.variant == Variant::sinc_hsrnn) {
    SincConfig cfg;
    cfg.channels = spec_.sinc.channels;
    cfg.kernel_size = spec_.sinc.kernel_size;
    cfg.sample_rate = spec_.sample_rate;
    cfg.f_min = spec_.sinc.f_min;
    cfg.f_max = spec_.sinc.f_max;
    sinc_ = mel_init(cfg);
    features = spec_.sinc.channels;
  }

  if (spec_.variant == Variant::rnn) {
    const std::size_t h = spec_.hidden_sizes.front();
    RnnCell cell{weight({h, features}), weight({h, h}), std::nullopt, act};
    if (bias) cell.bias = ad::Tensor(ad::Shape{h}, true);
    rnn_ = std::move(cell);
    rnn_h0_ = ad::Tensor(ad::Shape{h});
    features = h;
  } else {
    for (std::size_t h : spec_.hidden_sizes) {
      HsLayer layer;
      for (std::size_t j = 0; j < spec_.subsample_factor; ++j) layer.w_pos.push_back(weight({h, features}));
      layer.w_rec = weight({h, h});
      if (bias) layer.bias = ad::Tensor(ad::Shape{h}, true);
      layer.activation = act;
      hs_.push_back(std::move(layer));
      hs_h0_.emplace_back(ad::Shape{h});
      features = h;
    }
  }

  for (std::size_t d : spec_.dense_sizes) {
    Dense layer{weight({d, features}), std::nullopt, act};
    if (bias) layer.bias = ad::Tensor(ad::Shape{d}, true);
    dense_.push_back(std::move(layer));
    features = d;
  }
  Dense out{weight({spec_.n_classes, features}), std::nullopt, std::nullopt};
  if (bias) out.bias = ad::Tensor(ad::Shape{spec_.n_classes}, true);
  dense_.push_back(std::move(out));
}

std::vector<NamedParameter> Model::parameters() const {
  std::vector<NamedParameter> out;
  if (sinc_) {
    out.push_back({"sinc.f_low", sinc_->f_low, ParamRole::frequency});
    out.push_back({"sinc.band_width", sinc_->band_width, ParamRole::frequency});
  }
  if (rnn_) {
    out.push_back({"rnn.w_in", rnn_->w_in, ParamRole::weight});
    out.push_back({"rnn.w_rec", rnn_->w_rec, ParamRole::weight});
    if (rnn_->bias) out.push_back({"rnn.bias", *rnn_->bias, ParamRole::bias});
    out.push_back({"rnn.h0", rnn_h0_, ParamRole::state});
  }
  for (std::size_t i = 0; i < hs_.size(); ++i) {
    const std::string prefix = "hs" + std::to_string(i) + ".";
    for (std::size_t j = 0; j < hs_[i].w_pos.size(); ++j)
      out.push_back({prefix + "w_pos" + std::to_string(j), hs_[i].w_pos[j], ParamRole::weight});
    out.push_back({prefix + "w_rec", hs_[i].w_rec, ParamRole::weight});
    if (hs_[i].bias) out.push_back({prefix + "bias", *hs_[i].bias, ParamRole::bias});
    if (spec_.hs_random_h0) out.push_back({prefix + "h0", hs_h0_[i], ParamRole::state});
  }
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    const std::string prefix = i + 1 == dense_.size() ? std::string("out.") : "dense" + std::to_string(i) + ".";
    out.push_back({prefix + "weight", dense_[i].weight, ParamRole::weight});
    if (dense_[i].bias) out.push_back({prefix + "bias", *dense_[i].bias, ParamRole::bias});
  }
  return out;
}

std::vector<ad::Tensor> Model::trainable() const {
  std::vector<ad::Tensor> out;
  for (auto& p : parameters())
    if (p.role != ParamRole::state) out.push_back(p.tensor);
  return out;
}

std::vector<ad::Tensor> Model::weights() const {
  std::vector<ad::Tensor> out;
  for (auto& p : parameters())
    if (p.role == ParamRole::weight) out.push_back(p.tensor);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (auto& p : parameters())
    if (p.role != ParamRole::state) n += p.tensor.size();
  return n;
}

void Model::zero_grad() {
  for (auto& p : trainable()) p.zero_grad();
}

void Model::round_to_storage() {
  for (auto& p : parameters())
    for (double& v : p.tensor.values()) v = static_cast<double>(static_cast<float>(v));
}

Model Model::create(const ModelSpec& spec, std::uint64_t seed) {
  Model m;
  m.spec_ = spec;
  m.build_skeleton();
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> h0_dist(0.0, spec.h0_scale);
  for (auto& p : m.parameters()) {
    switch (p.role) {
      case ParamRole::weight: {
        const ad::Tensor init = nn::initialize(p.tensor.shape(), spec.init, rng);
        std::copy(init.values().begin(), init.values().end(), p.tensor.values().begin());
        break;
      }
      case ParamRole::state:
        for (double& v : p.tensor.values()) v = h0_dist(rng);
        break;
      case ParamRole::bias:
      case ParamRole::frequency:
        break;
    }
  }
  m.round_to_storage();
  return m;
}

Model Model::from_parameters(const ModelSpec& spec, const std::vector<std::pair<std::string, ad::Tensor>>& table) {
  Model m;
  m.spec_ = spec;
  m.build_skeleton();
  auto params = m.parameters();
  if (table.size() != params.size()) {
    std::string missing;
    for (auto& p : params) {
      bool found = false;
      for (auto& [name, t] : table) found = found || name == p.name;
      if (!found) missing += " " + p.name;
    }
    throw StructuralError("parameter table has " + std::to_string(table.size()) + " entries, model expects " +
                          std::to_string(params.size()) + (missing.empty() ? "" : "; missing:" + missing));
  }
  for (auto& p : params) {
    const ad::Tensor* src = nullptr;
    for (auto& [name, t] : table)
      if (name == p.name) src = &t;
    if (!src) throw StructuralError("layer parameter '" + p.name + "' missing from parameter table");
    if (src->shape() != p.tensor.shape()) {
      throw StructuralError("layer parameter '" + p.name + "' has shape " + ad::to_string(src->shape()) +
                            ", architecture expects " + ad::to_string(p.tensor.shape()));
    }
    std::copy(src->values().begin(), src->values().end(), p.tensor.values().begin());
  }
  return m;
}

Model Model::clone() const {
  std::vector<std::pair<std::string, ad::Tensor>> table;
  for (auto& p : parameters()) table.emplace_back(p.name, p.tensor);
  return from_parameters(spec_, table);
}

ForwardTrace Model::trace(ad::Graph& g, const ad::Tensor& intensity) const {
  if (intensity.rank() != 2) {
    throw DimensionError("model input must be intensity [B x T], got " + ad::to_string(intensity.shape()));
  }
  ForwardTrace tr;
  Sequence seq;
  if (sinc_) {
    tr.filtered = sinc_forward(g, *sinc_, intensity);
    seq = unstack_time(g, *tr.filtered);
  } else {
    seq = sequence_from_signal(intensity);
  }

  ad::Tensor last;
  if (rnn_) {
    tr.recurrent.push_back(rnn_forward(g, *rnn_, seq, rnn_h0_));
    last = tr.recurrent.back().back();
  } else {
    for (std::size_t i = 0; i < hs_.size(); ++i) {
      const Sequence& input = tr.recurrent.empty() ? seq : tr.recurrent.back();
      tr.recurrent.push_back(hs_layer_forward(g, hs_[i], input, hs_h0_[i]));
    }
    last = tr.recurrent.back().back();
  }
  for (std::size_t i = 0; i + 1 < dense_.size(); ++i) {
    last = dense_forward(g, dense_[i], last);
    tr.dense.push_back(last);
  }
  tr.logits = dense_forward(g, dense_.back(), last);
  return tr;
}

ad::Tensor Model::forward(ad::Graph& g, const ad::Tensor& intensity) const { return trace(g, intensity).logits; }

}  // namespace ann::layers
