#include "ann/data/manifest.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ann/data/resample.hpp"
#include "ann/data/wav.hpp"
#include "ann/errors.hpp"
#include "ann/util/hash.hpp"

namespace ann::data {
namespace fs = std::filesystem;

std::vector<ManifestEntry> scan_audiomnist(const fs::path& root) {
  if (!fs::is_directory(root)) throw ConfigError("dataset directory not found: " + root.string());
  static const std::regex name_re(R"((\d)_(\d+)_(\d+)\.wav)");
  std::vector<ManifestEntry> entries;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (!item.is_regular_file() || item.path().extension() != ".wav") continue;
    const std::string name = item.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, name_re)) {
      spdlog::warn("skipping {}: name is not <digit>_<speaker>_<idx>.wav", item.path().string());
      continue;
    }
    entries.push_back({fs::relative(item.path(), root).generic_string(), std::stoi(m[1]), std::stoi(m[2])});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return entries;
}

void write_manifest(const fs::path& file, std::span<const ManifestEntry> entries) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "path,label,speaker_id\n";
  for (const auto& e : entries) {
    if (e.path.find_first_of(",\n\"") != std::string::npos) {
      throw ConfigError("manifest path contains a comma, quote or newline: " + e.path);
    }
    out << e.path << ',' << e.label << ',' << e.speaker_id << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open manifest " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty manifest " + file.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "path,label,speaker_id") {
    throw ConfigError("manifest header must be 'path,label,speaker_id', got '" + line + "'");
  }
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string path, label, speaker;
    if (!std::getline(ss, path, ',') || !std::getline(ss, label, ',') || !std::getline(ss, speaker)) {
      throw ConfigError(fmt::format("{}:{}: expected 3 fields", file.string(), line_no));
    }
    try {
      std::size_t used = 0;
      ManifestEntry e{path, std::stoi(label, &used), 0};
      if (used != label.size()) throw std::invalid_argument("label");
      e.speaker_id = std::stoi(speaker, &used);
      if (used != speaker.size()) throw std::invalid_argument("speaker");
      if (e.label < 0) throw std::invalid_argument("label");
      entries.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("{}:{}: label and speaker_id must be integers", file.string(), line_no));
    }
  }
  return entries;
}

namespace {

constexpr char kMagic[4] = {'A', 'I', 'N', 'N'};
constexpr std::size_t kHeader = 16;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | in[at + i];
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_cache(std::span<const double> intensity, std::uint32_t rate) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le(out, kCacheVersion, 2);
  put_le(out, rate, 4);
  put_le(out, intensity.size(), 4);
  put_le(out, 0, 2);
  for (double v : intensity) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
  return out;
}

std::vector<double> decode_cache(std::span<const std::uint8_t> bytes, std::uint32_t expected_rate) {
  if (bytes.size() < kHeader) throw ParseError("cache header truncated", bytes.size());
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw ParseError("bad cache magic", 0);
  const auto version = get_le(bytes, 4, 2);
  if (version != kCacheVersion) throw FormatError("unsupported cache version " + std::to_string(version));
  const auto rate = static_cast<std::uint32_t>(get_le(bytes, 6, 4));
  if (rate != expected_rate) {
    throw FormatError(fmt::format("cache holds {} Hz data, expected {} Hz", rate, expected_rate));
  }
  const auto length = static_cast<std::size_t>(get_le(bytes, 10, 4));
  if (bytes.size() != kHeader + 4 * length) {
    throw ParseError(fmt::format("cache payload holds {} bytes, header says {}", bytes.size() - kHeader, 4 * length),
                     kHeader);
  }
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, kHeader + 4 * i, 4)));
  }
  return out;
}

namespace {

std::vector<std::uint8_t> slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

AudioRecord prepare(const ManifestEntry& entry, const LoadOptions& options) {
  const fs::path source = fs::path(entry.path).is_absolute() ? fs::path(entry.path) : options.base_dir / entry.path;
  AudioRecord record;
  record.label = entry.label;
  record.speaker_id = entry.speaker_id;
  record.source_path = entry.path;

  fs::path cached;
  if (options.cache_dir) {
    cached = *options.cache_dir /
             fmt::format("{:016x}_{}.ainn", fnv1a(fs::absolute(source).generic_string()), options.target_rate);
    if (fs::exists(cached)) {
      try {
        record.intensity = decode_cache(slurp(cached), options.target_rate);
        if (record.intensity.size() == options.target_rate) return record;
      } catch (const std::exception& e) {
        spdlog::warn("ignoring cache entry {}: {}", cached.string(), e.what());
      }
    }
  }

  const WavAudio audio = load_wav(source);
  const auto resampled = resample(audio.samples, audio.sample_rate, options.target_rate);
  record.intensity = preprocess(resampled, options.target_rate);

  if (options.cache_dir) {
    const auto bytes = encode_cache(record.intensity, options.target_rate);
    // Write-then-rename so concurrent readers never see a partial file.
    const fs::path tmp = cached.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    std::error_code ec;
    fs::rename(tmp, cached, ec);
    if (ec) spdlog::warn("could not write cache entry {}: {}", cached.string(), ec.message());
    // The cache holds f32; return the same values a later cache hit would.
    record.intensity = decode_cache(bytes, options.target_rate);
  }
  return record;
}

}  // namespace

std::vector<AudioRecord> load_records(std::span<const ManifestEntry> entries, const LoadOptions& options) {
  if (options.cache_dir) fs::create_directories(*options.cache_dir);
  std::vector<AudioRecord> records(entries.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        records[i] = prepare(entries[i], options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = entries.size();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(entries.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(records.begin(), records.end(),
                   [](const AudioRecord& a, const AudioRecord& b) { return a.source_path < b.source_path; });
  spdlog::info("loaded {} records at {} Hz", records.size(), options.target_rate);
  return records;
}

}  // namespace ann::data
