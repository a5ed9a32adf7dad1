#include "ann/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "ann/errors.hpp"

namespace ann::data {

std::vector<double> preprocess(std::span<const double> samples, std::uint32_t target_rate) {
  if (target_rate == 0) throw ConfigError("target_rate must be positive");
  const std::size_t length = target_rate;
  std::span<const double> kept = samples;
  if (samples.size() > length) {
    const std::size_t start = (samples.size() - length) / 2;
    spdlog::info("center-cropping clip of {} samples to {}", samples.size(), length);
    kept = samples.subspan(start, length);
  }
  std::vector<double> out(length, 0.0);
  std::copy(kept.begin(), kept.end(), out.begin());

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak < 1e-9) {
    spdlog::warn("silent clip ({} samples), keeping all-zero intensity", samples.size());
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) {
    const double a = std::clamp(v / peak, -1.0, 1.0);
    v = a * a;
  }
  return out;
}

DatasetSplit speaker_disjoint_split(std::span<const AudioRecord> records, double train_fraction, std::uint64_t seed) {
  std::set<int> unique;
  for (const auto& r : records) unique.insert(r.speaker_id);
  if (unique.size() < 2) {
    throw ConfigError("speaker-disjoint split needs at least 2 speakers, got " + std::to_string(unique.size()));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");

  std::vector<int> speakers(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw keeps the order identical across standard libraries.
  for (std::size_t i = speakers.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(speakers[i], speakers[j]);
  }
  const long n = static_cast<long>(speakers.size());
  const long n_train = std::clamp(std::lround(train_fraction * static_cast<double>(n)), 1L, n - 1);

  DatasetSplit split;
  split.train_speakers.insert(speakers.begin(), speakers.begin() + n_train);
  split.test_speakers.insert(speakers.begin() + n_train, speakers.end());
  for (const auto& r : records) {
    (split.train_speakers.count(r.speaker_id) ? split.train : split.test).push_back(r);
  }
  return split;
}

std::vector<AudioRecord> binary_subset(std::span<const AudioRecord> records) {
  std::vector<AudioRecord> out;
  for (const auto& r : records)
    if (r.label == 0 || r.label == 1) out.push_back(r);
  return out;
}

namespace {

double tukey(std::size_t n, std::size_t length, double alpha) {
  if (length < 2) return 1.0;
  const double x = static_cast<double>(n) / static_cast<double>(length - 1);
  const double edge = alpha / 2.0;
  if (x < edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * x / edge));
  if (x > 1.0 - edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - x) / edge));
  return 1.0;
}

}  // namespace

std::vector<SynthClip> synth_clips(std::span<const ToneClass> classes, const SynthOptions& options) {
  if (classes.empty()) throw ConfigError("synth_dataset needs at least one class");
  if (options.target_rate == 0) throw ConfigError("target_rate must be positive");
  if (options.n_speakers < 1) throw ConfigError("n_speakers must be at least 1");
  if (!(options.tone_seconds > 0.0 && options.tone_seconds <= 1.0)) throw ConfigError("tone_seconds must be in (0, 1]");
  if (options.amplitude_jitter < 0.0 || options.amplitude_jitter >= 1.0) {
    throw ConfigError("amplitude_jitter must be in [0, 1)");
  }
  const double nyquist = options.target_rate / 2.0;
  for (const auto& c : classes) {
    if (c.frequencies_hz.empty()) throw ConfigError("tone class without frequencies");
    for (double f : c.frequencies_hz) {
      if (!(f > 0.0 && f < nyquist)) {
        throw ConfigError("tone frequency " + std::to_string(f) + " Hz violates Nyquist (" + std::to_string(nyquist) +
                          " Hz at " + std::to_string(options.target_rate) + " Hz)");
      }
    }
  }

  const std::size_t length = options.target_rate;
  const std::size_t support = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::lround(options.tone_seconds * static_cast<double>(length))));
  const bool add_noise = options.noise && std::isfinite(options.snr_db) && options.snr_db >= 0.0;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<SynthClip> clips;
  clips.reserve(options.n_per_class * classes.size());
  int next_speaker = 0;
  for (std::size_t i = 0; i < options.n_per_class; ++i) {
    for (std::size_t label = 0; label < classes.size(); ++label) {
      const auto& tones = classes[label].frequencies_hz;
      const double amplitude = 1.0 + options.amplitude_jitter * (2.0 * unit(rng) - 1.0);
      const std::size_t onset = static_cast<std::size_t>(unit(rng) * static_cast<double>(length - support + 1));
      std::vector<double> phases(tones.size());
      for (double& p : phases) p = 2.0 * std::numbers::pi * unit(rng);

      std::vector<double> wave(length, 0.0);
      double power = 0.0;
      for (std::size_t n = 0; n < support && onset + n < length; ++n) {
        const double t = static_cast<double>(n) / options.target_rate;
        double s = 0.0;
        for (std::size_t k = 0; k < tones.size(); ++k) s += std::sin(2.0 * std::numbers::pi * tones[k] * t + phases[k]);
        s *= amplitude * tukey(n, support, 0.2) / static_cast<double>(tones.size());
        wave[onset + n] = s;
        power += s * s;
      }
      if (add_noise) {
        const double sigma = std::sqrt(power / static_cast<double>(support) / std::pow(10.0, options.snr_db / 10.0));
        for (double& v : wave) v += sigma * gauss(rng);
      }

      clips.push_back({std::move(wave), static_cast<int>(label), options.speaker_offset + next_speaker});
      next_speaker = (next_speaker + 1) % options.n_speakers;
    }
  }
  return clips;
}

std::vector<AudioRecord> synth_dataset(std::span<const ToneClass> classes, const SynthOptions& options) {
  std::vector<AudioRecord> records;
  for (auto& clip : synth_clips(classes, options)) {
    AudioRecord r;
    r.intensity = preprocess(clip.wave, options.target_rate);
    r.label = clip.label;
    r.speaker_id = clip.speaker_id;
    r.source_path = "synth/" + std::to_string(options.seed) + "/" + std::to_string(records.size());
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ToneClass> default_tone_classes(std::uint32_t target_rate) {
  const double f = static_cast<double>(target_rate);
  return {ToneClass{{0.05 * f}}, ToneClass{{0.15 * f}}};
}

DatasetSplit synth_split(std::span<const ToneClass> classes, std::size_t train_per_class, std::size_t test_per_class,
                         const SynthOptions& base) {
  SynthOptions train_opts = base;
  train_opts.n_per_class = train_per_class;
  SynthOptions test_opts = base;
  test_opts.n_per_class = test_per_class;
  test_opts.seed = base.seed ^ 0x9E3779B97F4A7C15ULL;
  test_opts.speaker_offset = base.speaker_offset + base.n_speakers;

  DatasetSplit split;
  split.train = synth_dataset(classes, train_opts);
  split.test = synth_dataset(classes, test_opts);
  for (const auto& r : split.train) split.train_speakers.insert(r.speaker_id);
  for (const auto& r : split.test) split.test_speakers.insert(r.speaker_id);
  return split;
}

}  // namespace ann::data
