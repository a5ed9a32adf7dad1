#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ann/cli/blueprint.hpp"
#include "ann/cli/checkpoint.hpp"
#include "ann/cli/config.hpp"
#include "ann/cli/experiment.hpp"
#include "ann/data/manifest.hpp"
#include "ann/data/wav.hpp"
#include "ann/errors.hpp"
#include "ann/train/gradcheck.hpp"
#include "ann/train/report.hpp"

namespace fs = std::filesystem;
using namespace ann;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string preset;
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string dataset;
  std::string data_root;
  std::string manifest;
  std::string out_dir = "runs";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--preset", o.preset, "Named preset (see `ann presets`)");
  cmd->add_option("--config", o.config_file, "TOML config file, applied after the preset")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override one key, e.g. --set train.epochs=5 (repeatable)");
  cmd->add_option("--seed", o.seed, "Training seed (train.seed)");
  cmd->add_option("--data", o.dataset, "Dataset: synthetic, audiomnist-binary or audiomnist-full");
  cmd->add_option("--data-root", o.data_root, "AudioMNIST data directory (<root>/<speaker>/*.wav)");
  cmd->add_option("--manifest", o.manifest, "Manifest CSV (path,label,speaker_id)");
  cmd->add_option("--out-dir", o.out_dir, "Directory for artifacts");
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Preset, then config file, then dedicated flags, then --set overrides.
cli::ExperimentConfig resolve(const CommonOptions& o) {
  cli::ExperimentConfig config;
  if (!o.preset.empty()) config = cli::preset(o.preset);
  if (!o.config_file.empty()) config = cli::parse_config(read_file(o.config_file), std::move(config));
  if (o.seed) cli::apply_setting(config, "train.seed", std::to_string(*o.seed));
  if (!o.dataset.empty()) cli::apply_setting(config, "data.dataset", o.dataset);
  if (!o.data_root.empty()) cli::apply_setting(config, "data.root", o.data_root);
  if (!o.manifest.empty()) cli::apply_setting(config, "data.manifest", o.manifest);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cli::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  train::validate(config.train);
  return config;
}

void save_run(const fs::path& dir, const std::string& suffix, const train::RunResult& run,
              const cli::ExperimentConfig& config, const std::string& preset_name) {
  train::write_text(dir / ("metrics" + suffix + ".csv"), train::metrics_csv(run));
  train::write_text(dir / ("confusion" + suffix + ".csv"), train::confusion_csv(run.confusion));
  cli::CheckpointMeta meta{run.seed, run.epochs.size(), cli::config_hash(config), preset_name};
  cli::save_checkpoint(dir / ("checkpoint" + suffix + ".annc"), cli::make_checkpoint(*run.model, meta));
}

int cmd_train(const CommonOptions& o, std::size_t jobs) {
  const auto config = resolve(o);
  const fs::path dir = o.out_dir;
  train::write_text(dir / "config.toml", cli::to_toml(config));
  const auto split = cli::load_split(config);

  if (config.runs <= 1) {
    const auto run = train::train(config.train, split);
    save_run(dir, "", run, config, o.preset);
    const auto sparsity = train::sparsity_report(*run.model);
    fmt::print("seed {}: final test accuracy {:.4f} ({} epochs, {:.1f} s), exact zero weights {:.2f}%\n", run.seed,
               run.final_accuracy(), run.epochs.size(), run.wall_seconds, 100.0 * sparsity.zero_fraction);
    return 0;
  }

  const auto result = train::multi_seed(config.train, split, config.runs, 1, jobs);
  std::string summary = "seed,final_test_acc,epochs,diverged\n";
  std::string metrics = "seed,epoch,train_acc,test_acc,train_loss,test_loss\n";
  for (const auto& run : result.runs) {
    const auto rows = train::metrics_csv(run);
    for (std::size_t at = rows.find('\n') + 1; at < rows.size();) {
      const std::size_t end = rows.find('\n', at);
      metrics += fmt::format("{},{}\n", run.seed, rows.substr(at, end - at));
      at = end + 1;
    }
    summary += fmt::format("{},{:.6f},{},{}\n", run.seed, run.diverged ? 0.0 : run.final_accuracy(),
                           run.epochs.size(), run.diverged ? 1 : 0);
    if (!run.diverged) save_run(dir, fmt::format("_seed{}", run.seed), run, config, o.preset);
  }
  summary += fmt::format("mean,{:.6f},,\nstd,{:.6f},,\n", result.mean, result.std);
  train::write_text(dir / "summary.csv", summary);
  train::write_text(dir / "metrics.csv", metrics);
  fmt::print("{} of {} runs completed{}: mean test accuracy {:.4f} +/- {:.4f}\n", result.completed, config.runs,
             result.partial ? " (partial: some runs diverged)" : "", result.mean, result.std);
  return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint_path, const std::string& which) {
  const auto checkpoint = cli::load_checkpoint(checkpoint_path);
  // Without an explicit config, reuse the one written next to the checkpoint.
  CommonOptions opts = o;
  const fs::path sibling = fs::path(checkpoint_path).parent_path() / "config.toml";
  if (opts.preset.empty() && opts.config_file.empty() && fs::exists(sibling)) opts.config_file = sibling.string();
  if (opts.preset.empty() && opts.config_file.empty()) opts.preset = checkpoint.meta.preset;
  auto config = resolve(opts);
  const auto hash = cli::config_hash(config);
  if (hash != checkpoint.meta.config_hash) {
    spdlog::warn("config hash {:016x} differs from the checkpoint's {:016x}; evaluating with the checkpoint's model",
                 hash, checkpoint.meta.config_hash);
  }
  config.train.model = checkpoint.spec;
  config.train.target_rate = static_cast<std::uint32_t>(checkpoint.spec.sample_rate);

  const auto split = cli::load_split(config);
  std::vector<data::AudioRecord> records;
  if (which == "train" || which == "all") records.insert(records.end(), split.train.begin(), split.train.end());
  if (which == "test" || which == "all") records.insert(records.end(), split.test.begin(), split.test.end());
  const auto model = checkpoint.model();
  const auto ev = train::evaluate(model, records);
  const fs::path out = fs::path(o.out_dir) / fmt::format("eval_{}_confusion.csv", which);
  train::write_text(out, train::confusion_csv(ev.confusion));
  fmt::print("{} split: accuracy {:.6f}, loss {:.6f} on {} records (confusion matrix in {})\n", which, ev.accuracy,
             ev.loss, records.size(), out.string());
  return 0;
}

int cmd_sweep(const CommonOptions& o, std::size_t jobs) {
  CommonOptions opts = o;
  if (opts.preset.empty()) opts.preset = "hsrnn-init-sweep";
  const auto config = resolve(opts);
  const auto split = cli::load_split(config);
  const auto points = train::init_sweep(config.train, split, config.sweep_c, config.sweep_runs, jobs);
  const fs::path out = fs::path(o.out_dir) / "sweep.csv";
  train::write_text(out, train::sweep_csv(points));
  for (const auto& p : points) {
    fmt::print("c={:<6} mean {:.4f} std {:.4f} ({} runs)\n", p.c, p.mean_acc, p.std_acc, p.completed);
  }
  fmt::print("wrote {}\n", out.string());
  return 0;
}

int cmd_gradcheck(const CommonOptions& o, const train::ModelGradCheckOptions& gc, double tolerance) {
  const auto config = resolve(o);
  const auto result = train::model_gradcheck(config.train.model, gc);
  fmt::print("{:<20} {:>8} {:>14}\n", "parameter", "size", "max rel err");
  for (const auto& p : result.params) fmt::print("{:<20} {:>8} {:>14.3e}\n", p.name, p.size, p.max_rel_error);
  const bool pass = result.max_rel_error < tolerance;
  fmt::print("{}: max relative error {:.3e} at {} ({} coordinates checked, {} skipped near kinks), tolerance {:.0e}\n",
             pass ? "PASS" : "FAIL", result.max_rel_error, result.worst, result.checked, result.skipped, tolerance);
  return pass ? 0 : kExitCheckFailed;
}

int cmd_export(const std::string& checkpoint_path, const std::string& out, bool force) {
  const auto checkpoint = cli::load_checkpoint(checkpoint_path);
  const auto blueprint = cli::export_blueprint(checkpoint, {force});
  std::size_t prunable = 0;
  for (const auto& c : blueprint["connections"]) prunable += c["prunable"].get<bool>() ? 1 : 0;
  train::write_text(out, blueprint.dump(2) + "\n");
  fmt::print("wrote {}: {} filters, {} layers, {} connections ({} prunable)\n", out, blueprint["filters"].size(),
             blueprint["layers"].size(), blueprint["connections"].size(), prunable);
  return 0;
}

int cmd_manifest(const std::string& root, const std::string& out) {
  const auto entries = data::scan_audiomnist(root);
  if (entries.empty()) throw ConfigError("no <digit>_<speaker>_<index>.wav files under " + root);
  data::write_manifest(out, entries);
  fmt::print("wrote {} with {} entries\n", out, entries.size());
  return 0;
}

int cmd_synth(const CommonOptions& o, std::size_t per_class, int speakers) {
  CommonOptions opts = o;
  if (opts.dataset.empty()) opts.dataset = "synthetic";
  const auto config = resolve(opts);
  const auto classes = cli::synth_classes(config);
  auto synth = cli::synth_options(config);
  synth.n_per_class = per_class;
  synth.n_speakers = speakers;
  synth.speaker_offset = 1;  // AudioMNIST speaker directories start at 01
  const auto clips = data::synth_clips(classes, synth);

  const fs::path root = o.out_dir;
  std::vector<data::ManifestEntry> entries;
  std::map<std::pair<int, int>, int> counter;
  for (const auto& clip : clips) {
    const int index = counter[{clip.label, clip.speaker_id}]++;
    const std::string rel = fmt::format("{:02d}/{}_{:02d}_{}.wav", clip.speaker_id, clip.label, clip.speaker_id, index);
    fs::create_directories((root / rel).parent_path());
    data::save_wav_pcm16(root / rel, clip.wave, synth.target_rate);
    entries.push_back({rel, clip.label, clip.speaker_id});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  data::write_manifest(root / "manifest.csv", entries);
  fmt::print("wrote {} clips ({} classes, {} speakers, {} Hz) and {}\n", clips.size(), classes.size(), speakers,
             synth.target_rate, (root / "manifest.csv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic neural network training, evaluation and blueprint export"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  CommonOptions common;
  std::size_t jobs = 1;

  auto* train_cmd = app.add_subcommand("train", "Train one model, or several seeds when train.runs > 1");
  add_common(train_cmd, common);
  train_cmd->add_option("--jobs", jobs, "Parallel runs for multi-seed training");

  std::string checkpoint_path;
  std::string split_name = "test";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write its confusion matrix");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", split_name, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));

  auto* sweep_cmd = app.add_subcommand("sweep-init", "Accuracy against the U(0, c) initialization bound");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--jobs", jobs, "Parallel runs per point");

  train::ModelGradCheckOptions gc;
  double tolerance = 1e-4;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");
  add_common(grad_cmd, common);
  grad_cmd->add_option("--seconds", gc.seconds, "Input length in seconds");
  grad_cmd->add_option("--batch", gc.batch, "Batch size");
  grad_cmd->add_option("--eps", gc.fd.eps, "Finite-difference step");
  grad_cmd->add_option("--tolerance", tolerance, "Maximum accepted relative error");
  grad_cmd->add_flag("--perturb-grad", gc.perturb_grad)->group("");

  std::string blueprint_out = "blueprint.json";
  bool force = false;
  auto* export_cmd = app.add_subcommand("export-blueprint", "Write the acoustic blueprint of a checkpoint");
  export_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", blueprint_out, "Output JSON file");
  export_cmd->add_flag("--force", force, "Export an unconstrained model, flagged as non-physical");

  std::string manifest_root;
  std::string manifest_out = "manifest.csv";
  auto* manifest_cmd = app.add_subcommand("make-manifest", "Index an AudioMNIST directory into a manifest CSV");
  manifest_cmd->add_option("--data-root", manifest_root, "AudioMNIST data directory")->required();
  manifest_cmd->add_option("--out", manifest_out, "Output CSV");

  std::size_t per_class = 20;
  int speakers = 4;
  auto* synth_cmd = app.add_subcommand("synth-data", "Write the synthetic tone task as WAV files in AudioMNIST layout");
  add_common(synth_cmd, common);
  synth_cmd->add_option("--per-class", per_class, "Clips per class");
  synth_cmd->add_option("--speakers", speakers, "Number of pseudo-speakers")->check(CLI::PositiveNumber);

  auto* presets_cmd = app.add_subcommand("presets", "List presets, or print one as canonical TOML");
  std::string show_preset;
  presets_cmd->add_option("name", show_preset, "Preset to print");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train_cmd) return cmd_train(common, jobs);
    if (*eval_cmd) return cmd_eval(common, checkpoint_path, split_name);
    if (*sweep_cmd) return cmd_sweep(common, jobs);
    if (*grad_cmd) return cmd_gradcheck(common, gc, tolerance);
    if (*export_cmd) return cmd_export(checkpoint_path, blueprint_out, force);
    if (*manifest_cmd) return cmd_manifest(manifest_root, manifest_out);
    if (*synth_cmd) return cmd_synth(common, per_class, speakers);
    if (*presets_cmd) {
      if (show_preset.empty()) {
        for (const auto& name : cli::preset_names()) fmt::print("{}\n", name);
      } else {
        fmt::print("{}", cli::to_toml(cli::preset(show_preset)));
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
