#include "ann/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "ann/errors.hpp"
#include "ann/util/hash.hpp"

namespace ann::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt::format("{}", values[i]);
  return out;
}

// "50,50+70": one class per comma-separated item, chord tones joined by '+'.
std::vector<std::vector<double>> to_chords(const std::string& key, const std::string& v) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::vector<double> tones;
    std::stringstream chord(item);
    std::string tone;
    while (std::getline(chord, tone, '+')) {
      tone = trim(tone);
      if (tone.empty()) throw ConfigError(fmt::format("{}: empty tone in '{}'", key, v));
      tones.push_back(to_double(key, tone));
    }
    if (!tones.empty()) out.push_back(std::move(tones));
  }
  return out;
}

std::string join_chords(const std::vector<std::vector<double>>& classes) {
  std::string out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ",";
    for (std::size_t j = 0; j < classes[i].size(); ++j) out += (j ? "+" : "") + fmt::format("{}", classes[i][j]);
  }
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  try {
    return layers::parse_sizes(v);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

struct Setting {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool quoted = false;
};

#define ANN_NUM(KEY, FIELD, CONV)                                                              \
  Setting {                                                                                    \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = CONV(KEY, v); },            \
        [](const ExperimentConfig& c) { return fmt::format("{}", c.FIELD); }                    \
  }
#define ANN_BOOL(KEY, FIELD)                                                                   \
  Setting {                                                                                    \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_bool(KEY, v); },         \
        [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); }       \
  }
#define ANN_STR(KEY, FIELD)                                                                    \
  Setting {                                                                                    \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = v; },                       \
        [](const ExperimentConfig& c) { return c.FIELD; }, true                                 \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {"model.variant", [](ExperimentConfig& c, const std::string& v) { c.train.model.variant = layers::parse_variant(v); },
       [](const ExperimentConfig& c) { return std::string(layers::to_string(c.train.model.variant)); }, true},
      {"model.hidden_sizes",
       [](ExperimentConfig& c, const std::string& v) { c.train.model.hidden_sizes = to_sizes("model.hidden_sizes", v); },
       [](const ExperimentConfig& c) { return layers::format_sizes(c.train.model.hidden_sizes); }, true},
      {"model.dense_sizes",
       [](ExperimentConfig& c, const std::string& v) { c.train.model.dense_sizes = to_sizes("model.dense_sizes", v); },
       [](const ExperimentConfig& c) { return layers::format_sizes(c.train.model.dense_sizes); }, true},
      ANN_BOOL("model.constrained", train.model.constrained),
      {"model.activation",
       [](ExperimentConfig& c, const std::string& v) { c.train.model.activation.kind = nn::parse_activation_kind(v); },
       [](const ExperimentConfig& c) { return std::string(nn::to_string(c.train.model.activation.kind)); }, true},
      ANN_NUM("model.activation_offset", train.model.activation.offset, to_double),
      {"model.init", [](ExperimentConfig& c, const std::string& v) { c.train.model.init.kind = nn::parse_init_kind(v); },
       [](const ExperimentConfig& c) { return std::string(nn::to_string(c.train.model.init.kind)); }, true},
      ANN_NUM("model.init_scale", train.model.init.scale, to_double),
      ANN_NUM("model.subsample_factor", train.model.subsample_factor, to_uint),
      ANN_NUM("model.n_classes", train.model.n_classes, to_uint),
      ANN_NUM("model.h0_scale", train.model.h0_scale, to_double),
      ANN_BOOL("model.hs_random_h0", train.model.hs_random_h0),
      ANN_NUM("sinc.channels", train.model.sinc.channels, to_uint),
      ANN_NUM("sinc.kernel_size", train.model.sinc.kernel_size, to_uint),
      ANN_NUM("sinc.f_min", train.model.sinc.f_min, to_double),
      ANN_NUM("sinc.f_max", train.model.sinc.f_max, to_double),
      ANN_NUM("train.epochs", train.epochs, to_uint),
      ANN_NUM("train.batch_size", train.batch_size, to_uint),
      ANN_NUM("train.lr", train.lr, to_double),
      ANN_NUM("train.fine_lr", train.fine_lr, to_double),
      ANN_NUM("train.fine_tune_epochs", train.fine_tune_epochs, to_uint),
      ANN_NUM("train.max_grad_norm", train.max_grad_norm, to_double),
      ANN_NUM("train.seed", train.seed, to_uint),
      ANN_NUM("train.runs", runs, to_uint),
      ANN_BOOL("train.check_bounds", train.check_bounds),
      {"train.sweep_c",
       [](ExperimentConfig& c, const std::string& v) { c.sweep_c = to_doubles("train.sweep_c", v); },
       [](const ExperimentConfig& c) { return join(c.sweep_c); }, true},
      ANN_NUM("train.sweep_runs", sweep_runs, to_uint),
      {"data.dataset",
       [](ExperimentConfig& c, const std::string& v) { c.train.dataset = train::parse_dataset_kind(v); },
       [](const ExperimentConfig& c) { return std::string(train::to_string(c.train.dataset)); }, true},
      {"data.target_rate",
       [](ExperimentConfig& c, const std::string& v) {
         const auto rate = to_uint("data.target_rate", v);
         if (rate != 1000 && rate != 2000 && rate != 8000) {
           throw ConfigError(fmt::format("data.target_rate: expected 1000, 2000 or 8000, got {}", v));
         }
         c.train.target_rate = static_cast<std::uint32_t>(rate);
         c.train.model.sample_rate = static_cast<double>(rate);
       },
       [](const ExperimentConfig& c) { return fmt::format("{}", c.train.target_rate); }},
      ANN_STR("data.root", data.root),
      ANN_STR("data.manifest", data.manifest),
      ANN_STR("data.cache_dir", data.cache_dir),
      ANN_NUM("data.train_fraction", data.train_fraction, to_double),
      ANN_NUM("data.split_seed", data.split_seed, to_uint),
      ANN_NUM("data.threads", data.threads, to_uint),
      ANN_NUM("data.synth_train_per_class", data.synth_train_per_class, to_uint),
      ANN_NUM("data.synth_test_per_class", data.synth_test_per_class, to_uint),
      ANN_NUM("data.synth_seed", data.synth_seed, to_uint),
      ANN_NUM("data.synth_snr_db", data.synth_snr_db, to_double),
      ANN_NUM("data.synth_jitter", data.synth_jitter, to_double),
      ANN_NUM("data.synth_tone_seconds", data.synth_tone_seconds, to_double),
      {"data.synth_classes",
       [](ExperimentConfig& c, const std::string& v) { c.data.synth_classes = to_chords("data.synth_classes", v); },
       [](const ExperimentConfig& c) { return join_chords(c.data.synth_classes); }, true},
  };
  return table;
}

#undef ANN_NUM
#undef ANN_BOOL
#undef ANN_STR

std::string unquote(const std::string& raw, std::size_t line_no) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return raw.substr(1, raw.size() - 2);
  if (!raw.empty() && raw.front() == '"') throw ConfigError(fmt::format("line {}: unterminated string", line_no));
  return raw;
}

}  // namespace

std::map<std::string, std::string> parse_toml_subset(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: malformed section header", line_no));
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError(fmt::format("line {}: duplicate key {}", line_no, full));
    out[full] = unquote(trim(std::string_view(line).substr(eq + 1)), line_no);
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : settings()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& s : settings()) {
    if (s.key == key) {
      s.set(config, value);
      return;
    }
  }
  std::string valid;
  for (const auto& k : config_keys()) valid += (valid.empty() ? "" : ", ") + k;
  throw ConfigError(fmt::format("unknown config key '{}'; valid keys: {}", key, valid));
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  for (const auto& [key, value] : parse_toml_subset(text)) apply_setting(base, key, value);
  return base;
}

std::string to_toml(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& s : settings()) {
    const auto dot = s.key.find('.');
    const std::string sec = s.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + fmt::format("[{}]\n", sec);
      section = sec;
    }
    const std::string value = s.get(config);
    out += fmt::format("{} = {}\n", s.key.substr(dot + 1), s.quoted ? "\"" + value + "\"" : value);
  }
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(to_toml(config)); }

namespace {

struct Preset {
  std::string name;
  std::string text;
};

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = [] {
    std::vector<Preset> p;
    const std::string constrained_common =
        "model.constrained = true\nmodel.activation = \"offset_abs\"\n";
    const std::string unconstrained_common =
        "model.constrained = false\nmodel.activation = \"tanh\"\nmodel.init = \"xavier_uniform\"\n"
        "model.init_scale = 1.0\n";

    // Simple recurrent baseline, binary task, 1 kHz.
    const std::string rnn =
        "model.variant = \"rnn\"\nmodel.hidden_sizes = \"8\"\nmodel.dense_sizes = \"\"\nmodel.n_classes = 2\n"
        "train.epochs = 30\ntrain.batch_size = 64\ntrain.lr = 0.001\ntrain.fine_tune_epochs = 0\ntrain.runs = 5\n"
        "data.dataset = \"audiomnist-binary\"\ndata.target_rate = 1000\n";
    p.push_back({"rnn-binary-constrained", rnn + constrained_common +
                                               "model.activation_offset = 0.05\nmodel.init = \"uniform_nonneg\"\n"
                                               "model.init_scale = 0.05\n"});
    p.push_back({"rnn-binary-unconstrained", rnn + unconstrained_common});

    // Hierarchical subsampling, 1 kHz.
    const std::string hs =
        "model.variant = \"hsrnn\"\nmodel.subsample_factor = 8\ntrain.batch_size = 64\ntrain.lr = 0.001\n"
        "train.fine_tune_epochs = 0\ntrain.runs = 5\ndata.target_rate = 1000\n";
    const std::string hs_constrained =
        constrained_common + "model.activation_offset = 0.05\nmodel.init = \"uniform_nonneg\"\nmodel.init_scale = 0.05\n"
        "train.epochs = 100\n";
    const std::string hs_unconstrained = unconstrained_common + "train.epochs = 50\n";
    const std::string binary = "data.dataset = \"audiomnist-binary\"\nmodel.n_classes = 2\n";
    const std::string full = "data.dataset = \"audiomnist-full\"\nmodel.n_classes = 10\n";
    const std::string hs_binary = "model.hidden_sizes = \"8-16-32\"\nmodel.dense_sizes = \"32\"\n";
    const std::string hs_full = "model.hidden_sizes = \"16-32-64\"\nmodel.dense_sizes = \"64\"\n";
    p.push_back({"hsrnn-binary-constrained", hs + hs_binary + binary + hs_constrained});
    p.push_back({"hsrnn-binary-unconstrained", hs + hs_binary + binary + hs_unconstrained});
    p.push_back({"hsrnn-full-constrained", hs + hs_full + full + hs_constrained});
    p.push_back({"hsrnn-full-unconstrained", hs + hs_full + full + hs_unconstrained});

    // Sinc front end, full ten-digit task.
    const std::string sinc =
        "model.variant = \"sinc_hsrnn\"\nmodel.hidden_sizes = \"8-16-32-64\"\nmodel.dense_sizes = \"64-32\"\n"
        "model.subsample_factor = 8\nsinc.channels = 5\nsinc.kernel_size = 101\nsinc.f_min = 30\nsinc.f_max = 0\n"
        "train.batch_size = 64\ntrain.lr = 0.001\ntrain.fine_lr = 0.0001\ntrain.fine_tune_epochs = 10\n"
        "train.runs = 5\n" + full;
    const std::string sinc_constrained = constrained_common +
                                         "model.activation_offset = 0.95\nmodel.init = \"abs_xavier_uniform\"\n"
                                         "model.init_scale = 0.13\ntrain.epochs = 80\n";
    const std::string sinc_unconstrained = unconstrained_common + "train.epochs = 40\n";
    for (const char* rate : {"1k", "2k", "8k"}) {
      const std::string hz = std::string(rate) == "1k" ? "1000" : std::string(rate) == "2k" ? "2000" : "8000";
      p.push_back({fmt::format("sinchsrnn-{}-constrained", rate), sinc + sinc_constrained + "data.target_rate = " + hz + "\n"});
      p.push_back(
          {fmt::format("sinchsrnn-{}-unconstrained", rate), sinc + sinc_unconstrained + "data.target_rate = " + hz + "\n"});
    }

    // Initialization sweep on the 8-16-32 configuration.
    p.push_back({"hsrnn-init-sweep", hs + hs_binary + binary + hs_constrained +
                                         "train.sweep_c = \"0.005,0.01,0.02,0.04,0.06,0.1,0.2,0.3,0.5,1.0\"\n"
                                         "train.sweep_runs = 3\n"});

    // Desk-scale presets on the synthetic tone task.
    const std::string desk = "data.dataset = \"synthetic\"\nmodel.n_classes = 2\ntrain.runs = 1\n";
    p.push_back({"desk-rnn-1k", rnn + constrained_common + desk +
                                    "model.activation_offset = 0.05\nmodel.init = \"uniform_nonneg\"\n"
                                    "model.init_scale = 0.05\ntrain.epochs = 10\ntrain.batch_size = 16\n"
                                    "train.lr = 0.003\n"});
    p.push_back({"desk-hsrnn-1k", hs + desk + constrained_common +
                                      "model.hidden_sizes = \"4-8-16\"\nmodel.dense_sizes = \"16\"\n"
                                      "model.activation_offset = 0.05\nmodel.init = \"uniform_nonneg\"\n"
                                      "model.init_scale = 0.05\ntrain.epochs = 15\ntrain.batch_size = 16\n"
                                      "train.lr = 0.003\ntrain.runs = 1\n"});
    p.push_back({"desk-sinchsrnn-2k", sinc + desk + constrained_common +
                                          "model.hidden_sizes = \"4-8-16\"\nmodel.dense_sizes = \"16-8\"\n"
                                          "model.n_classes = 2\nmodel.activation_offset = 0.2\n"
                                          "model.init = \"abs_xavier_uniform\"\nmodel.init_scale = 0.5\n"
                                          "train.epochs = 15\ntrain.fine_tune_epochs = 0\ntrain.batch_size = 8\n"
                                          "train.lr = 0.003\ntrain.runs = 1\ndata.target_rate = 2000\n"});
    return p;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& p : presets()) n.push_back(p.name);
    return n;
  }();
  return names;
}

ExperimentConfig preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name != name) continue;
    // Preset fragments are concatenated; later lines override earlier ones.
    ExperimentConfig config;
    std::stringstream lines(p.text);
    std::string line;
    while (std::getline(lines, line)) config = parse_config(line, std::move(config));
    return config;
  }
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError(fmt::format("unknown preset '{}'; valid presets: {}", name, valid));
}

}  // namespace ann::cli
