#include "ann/data/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "ann/errors.hpp"

namespace ann::data {
namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("truncated ") + what, pos_);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string t(reinterpret_cast<const char*>(&bytes_[pos_]), 4);
    pos_ += 4;
    return t;
  }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Format {
  std::uint16_t codec = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kFloat = 3;
constexpr std::uint16_t kExtensible = 0xFFFE;

double decode_sample(const std::uint8_t* p, const Format& fmt) {
  if (fmt.codec == kFloat) {
    std::uint32_t raw = 0;
    for (int i = 3; i >= 0; --i) raw = (raw << 8) | p[i];
    return static_cast<double>(std::bit_cast<float>(raw));
  }
  switch (fmt.bits) {
    case 8: return (static_cast<double>(p[0]) - 128.0) / 128.0;
    case 16: return static_cast<double>(static_cast<std::int16_t>(p[0] | (p[1] << 8))) / 32768.0;
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<double>(v) / 8388608.0;
    }
    case 32: {
      std::uint32_t raw = 0;
      for (int i = 3; i >= 0; --i) raw = (raw << 8) | p[i];
      return static_cast<double>(static_cast<std::int32_t>(raw)) / 2147483648.0;
    }
  }
  throw FormatError("unsupported PCM bit depth " + std::to_string(fmt.bits));
}

}  // namespace

WavAudio parse_wav(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.tag("RIFF header") != "RIFF") throw ParseError("missing RIFF magic", 0);
  r.u32("RIFF size");
  if (r.tag("WAVE tag") != "WAVE") throw ParseError("missing WAVE tag", 8);

  std::optional<Format> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  while (r.remaining() >= 8 && !(fmt && data)) {
    const std::size_t chunk_at = r.offset();
    const std::string id = r.tag("chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw ParseError("fmt chunk too small (" + std::to_string(size) + " bytes)", chunk_at);
      Reader f(r.take(size, "fmt chunk"));
      Format out;
      out.codec = f.u16("codec");
      out.channels = f.u16("channels");
      out.rate = f.u32("sample rate");
      f.u32("byte rate");
      out.block_align = f.u16("block align");
      out.bits = f.u16("bits per sample");
      if (out.codec == kExtensible) {
        if (size < 26) throw ParseError("extensible fmt chunk too small", chunk_at);
        f.u16("cb size");
        f.u16("valid bits");
        f.u32("channel mask");
        out.codec = f.u16("sub format");
      }
      fmt = out;
    } else if (id == "data") {
      // Some writers leave the size field at its maximum for streamed output.
      data = r.take(std::min<std::size_t>(size, r.remaining()), "data chunk");
    } else {
      r.skip(std::min<std::size_t>(size, r.remaining()), "chunk body");
    }
    if (size % 2 == 1 && r.remaining() > 0) r.skip(1, "chunk padding");
  }
  if (!fmt) throw ParseError("no fmt chunk", r.offset());
  if (!data) throw ParseError("no data chunk", r.offset());
  if (fmt->codec != kPcm && fmt->codec != kFloat) {
    throw FormatError("unsupported WAV codec " + std::to_string(fmt->codec) + " (PCM and IEEE float only)");
  }
  if (fmt->codec == kFloat && fmt->bits != 32) throw FormatError("float WAV must be 32-bit");
  if (fmt->codec == kPcm && fmt->bits != 8 && fmt->bits != 16 && fmt->bits != 24 && fmt->bits != 32) {
    throw FormatError("unsupported PCM bit depth " + std::to_string(fmt->bits));
  }
  if (fmt->channels == 0) throw FormatError("WAV with zero channels");
  if (fmt->rate == 0) throw FormatError("WAV with zero sample rate");
  const std::size_t width = fmt->bits / 8;
  const std::size_t frame = width * fmt->channels;

  WavAudio audio;
  audio.sample_rate = fmt->rate;
  const std::size_t frames = data->size() / frame;
  audio.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) acc += decode_sample(&(*data)[i * frame + c * width], *fmt);
    audio.samples[i] = acc / fmt->channels;
  }
  return audio;
}

WavAudio load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> samples, std::uint32_t sample_rate) {
  std::vector<std::uint8_t> out;
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  };
  auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  tag("RIFF");
  put32(36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  put32(16);
  put16(kPcm);
  put16(1);
  put32(sample_rate);
  put32(sample_rate * 2);
  put16(2);
  put16(16);
  tag("data");
  put32(data_bytes);
  for (double s : samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const long q = std::lround(clipped * 32768.0);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
  }
  return out;
}

void save_wav_pcm16(const std::filesystem::path& path, std::span<const double> samples, std::uint32_t sample_rate) {
  const auto bytes = encode_wav_pcm16(samples, sample_rate);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ann::data
