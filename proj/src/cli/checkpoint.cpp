#include "ann/cli/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "ann/errors.hpp"

namespace ann::cli {

using nlohmann::json;

json spec_to_json(const layers::ModelSpec& spec) {
  return json{
      {"variant", layers::to_string(spec.variant)},
      {"hidden_sizes", spec.hidden_sizes},
      {"dense_sizes", spec.dense_sizes},
      {"constrained", spec.constrained},
      {"activation", {{"kind", nn::to_string(spec.activation.kind)}, {"offset", spec.activation.offset}}},
      {"init", {{"kind", nn::to_string(spec.init.kind)}, {"scale", spec.init.scale}}},
      {"subsample_factor", spec.subsample_factor},
      {"sample_rate", spec.sample_rate},
      {"sinc",
       {{"channels", spec.sinc.channels},
        {"kernel_size", spec.sinc.kernel_size},
        {"f_min", spec.sinc.f_min},
        {"f_max", spec.sinc.f_max}}},
      {"n_classes", spec.n_classes},
      {"h0_scale", spec.h0_scale},
      {"hs_random_h0", spec.hs_random_h0},
  };
}

layers::ModelSpec spec_from_json(const json& j) {
  try {
    layers::ModelSpec s;
    s.variant = layers::parse_variant(j.at("variant").get<std::string>());
    s.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    s.dense_sizes = j.at("dense_sizes").get<std::vector<std::size_t>>();
    s.constrained = j.at("constrained").get<bool>();
    s.activation.kind = nn::parse_activation_kind(j.at("activation").at("kind").get<std::string>());
    s.activation.offset = j.at("activation").at("offset").get<double>();
    s.init.kind = nn::parse_init_kind(j.at("init").at("kind").get<std::string>());
    s.init.scale = j.at("init").at("scale").get<double>();
    s.subsample_factor = j.at("subsample_factor").get<std::size_t>();
    s.sample_rate = j.at("sample_rate").get<double>();
    s.sinc.channels = j.at("sinc").at("channels").get<std::size_t>();
    s.sinc.kernel_size = j.at("sinc").at("kernel_size").get<std::size_t>();
    s.sinc.f_min = j.at("sinc").at("f_min").get<double>();
    s.sinc.f_max = j.at("sinc").at("f_max").get<double>();
    s.n_classes = j.at("n_classes").get<std::size_t>();
    s.h0_scale = j.at("h0_scale").get<double>();
    s.hs_random_h0 = j.at("hs_random_h0").get<bool>();
    layers::validate(s);
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model spec: ") + e.what());
  }
}

Checkpoint make_checkpoint(const layers::Model& model, const CheckpointMeta& meta) {
  Checkpoint c;
  c.spec = model.spec();
  c.meta = meta;
  for (const auto& p : model.parameters()) c.parameters.emplace_back(p.name, p.tensor.clone());
  return c;
}

namespace {

constexpr char kMagic[4] = {'A', 'N', 'N', 'C'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::size_t offset() const { return pos_; }
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) throw ParseError(fmt::format("checkpoint truncated in {}", what), pos_);
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kCheckpointVersion);
  const json header{{"spec", spec_to_json(checkpoint.spec)},
                    {"meta",
                     {{"seed", checkpoint.meta.seed},
                      {"epochs_completed", checkpoint.meta.epochs_completed},
                      {"config_hash", fmt::format("{:016x}", checkpoint.meta.config_hash)},
                      {"preset", checkpoint.meta.preset}}}};
  w.str(header.dump());
  w.u32(static_cast<std::uint32_t>(checkpoint.parameters.size()));
  for (const auto& [name, tensor] : checkpoint.parameters) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(tensor.rank()));
    for (auto d : tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : tensor.values()) {
      const float f = static_cast<float>(v);
      if (static_cast<double>(f) != v && std::isfinite(v)) {
        throw IntegrityError(fmt::format("parameter {} holds a value ({}) not representable in float32", name, v));
      }
      w.u32(std::bit_cast<std::uint32_t>(f));
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw ParseError("not a checkpoint (bad magic)", 0);
  r.le(4, "magic");
  const auto version = r.le(2, "version");
  if (version != kCheckpointVersion) throw FormatError(fmt::format("unsupported checkpoint version {}", version));

  Checkpoint c;
  const std::size_t header_at = r.offset();
  json header;
  try {
    header = json::parse(r.str("spec block"));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spec block is not valid JSON: ") + e.what(), header_at);
  }
  c.spec = spec_from_json(header.at("spec"));
  try {
    const auto& m = header.at("meta");
    c.meta.seed = m.at("seed").get<std::uint64_t>();
    c.meta.epochs_completed = m.at("epochs_completed").get<std::uint64_t>();
    c.meta.config_hash = std::stoull(m.at("config_hash").get<std::string>(), nullptr, 16);
    c.meta.preset = m.at("preset").get<std::string>();
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid checkpoint metadata: ") + e.what());
  }

  const std::uint32_t count = r.u32("block count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str("parameter name");
    const std::uint32_t rank = r.u32("rank");
    if (rank > 8) throw ParseError(fmt::format("parameter {} has implausible rank {}", name, rank), r.offset() - 4);
    ad::Shape shape;
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      shape.push_back(r.u32("shape"));
      n *= shape.back();
    }
    r.need(4 * n, "parameter data");
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<float>(r.u32("parameter data"));
    c.parameters.emplace_back(std::move(name), ad::Tensor(std::move(shape), std::move(values), true));
  }
  if (!r.done()) throw ParseError("trailing bytes after the last parameter block", r.offset());
  return c;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint) {
  const auto bytes = encode_checkpoint(checkpoint);
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace ann::cli
