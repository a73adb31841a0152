#pragma once

// Binary checkpoint container.
//
//   bytes 0..7   magic "EBGCKPT\0"
//   u32          format version (1)
//   u64 + bytes  config echo (UTF-8 text, "key = value" lines)
//   u64          array count
//   per array:   u32 name length, name bytes, u32 rank, u64 dims[rank],
//                f64 values (row-major)
//
// All integers and floats are little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/model/networks.hpp"

namespace ebgame::model {

inline constexpr char kCheckpointMagic[8] = {'E', 'B', 'G', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string config_echo;
  std::vector<NamedArray> arrays;

  const Tensor* find(std::string_view name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a.value;
    return nullptr;
  }
};

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, ck.config_echo.size());
  out += ck.config_echo;
  detail::put_le<std::uint64_t>(out, ck.arrays.size());
  for (const auto& a : ck.arrays) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.value.rank()));
    for (auto d : a.value.shape()) detail::put_le<std::uint64_t>(out, d);
    for (double v : a.value.data()) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  detail::Reader in(bytes);
  if (in.take(sizeof(kCheckpointMagic)) != std::string_view(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    throw ParseError("not a checkpoint (bad magic)");
  }
  const auto version = in.get_le<std::uint32_t>();
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_echo = std::string(in.take(in.get_le<std::uint64_t>()));
  const auto count = in.get_le<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = std::string(in.take(in.get_le<std::uint32_t>()));
    const auto rank = in.get_le<std::uint32_t>();
    if (rank == 0 || rank > 8) throw ParseError("array '" + a.name + "' has bad rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = in.get_le<std::uint64_t>();
    std::vector<double> vals(shape_size(shape));
    for (auto& v : vals) v = std::bit_cast<double>(in.get_le<std::uint64_t>());
    a.value = Tensor(std::move(shape), std::move(vals));
    ck.arrays.push_back(std::move(a));
  }
  if (!in.done()) throw ParseError("trailing bytes after checkpoint arrays");
  return ck;
}

inline std::string model_config_text(const ModelConfig& c) {
  std::ostringstream os;
  os << "image_size = " << c.image_size << "\n"
     << "patch_size = " << c.patch_size << "\n"
     << "embed_dim = " << c.embed_dim << "\n"
     << "encoder_depth = " << c.encoder_depth << "\n"
     << "decoder_dim = " << c.decoder_dim << "\n"
     << "decoder_depth = " << c.decoder_depth << "\n"
     << "disc_dim = " << c.disc_dim << "\n"
     << "disc_depth = " << c.disc_depth << "\n"
     << "num_heads = " << c.num_heads << "\n"
     << "mlp_ratio = " << c.mlp_ratio << "\n";
  return os.str();
}

// Reads the model keys out of a config echo; other keys are ignored.
inline ModelConfig model_config_from_text(std::string_view text) {
  ModelConfig c;
  std::map<std::string, std::size_t*> fields = {
      {"image_size", &c.image_size},       {"patch_size", &c.patch_size},   {"embed_dim", &c.embed_dim},
      {"encoder_depth", &c.encoder_depth}, {"decoder_dim", &c.decoder_dim}, {"decoder_depth", &c.decoder_depth},
      {"disc_dim", &c.disc_dim},           {"disc_depth", &c.disc_depth},   {"num_heads", &c.num_heads},
      {"mlp_ratio", &c.mlp_ratio}};
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const auto it = fields.find(key);
    if (it == fields.end()) continue;
    const std::string val = trim(line.substr(eq + 1));
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
      *it->second = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ParseError("config key '" + key + "' expects an unsigned integer, got '" + val + "'", lineno);
    }
  }
  c.validate();
  return c;
}

inline Checkpoint make_checkpoint(const GeneratorParams& gen, const DiscriminatorParams& disc,
                                  const std::string& extra_echo = {}) {
  if (!(gen.config == disc.config)) throw ContractError("generator and discriminator configs differ");
  Checkpoint ck;
  ck.config_echo = model_config_text(gen.config) + extra_echo;
  auto collect = [&](const std::string& name, const Tensor& t) { ck.arrays.push_back({name, t}); };
  visit(gen, collect);
  visit(disc, collect);
  for (auto& a : ck.arrays) a.value.set_requires_grad(false);
  return ck;
}

struct LoadedModel {
  GeneratorParams generator;
  DiscriminatorParams discriminator;
  std::string config_echo;
};

// Rebuilds both networks from a checkpoint; every parameter must be present
// with the shape implied by the stored config.
inline LoadedModel restore_model(const Checkpoint& ck) {
  const ModelConfig cfg = model_config_from_text(ck.config_echo);
  std::mt19937_64 rng(0);
  LoadedModel m{make_generator(cfg, rng), make_discriminator(cfg, rng), ck.config_echo};
  std::size_t used = 0;
  auto fill = [&](const std::string& name, Tensor& t) {
    const Tensor* src = ck.find(name);
    if (!src) throw ParseError("checkpoint is missing array '" + name + "'");
    if (src->shape() != t.shape()) {
      throw ShapeError("checkpoint array '" + name + "' has shape " + shape_string(src->shape()) + ", expected " +
                       shape_string(t.shape()));
    }
    std::copy(src->data().begin(), src->data().end(), t.data().begin());
    ++used;
  };
  visit(m.generator, fill);
  visit(m.discriminator, fill);
  if (used != ck.arrays.size()) throw ParseError("checkpoint has unrecognised arrays");
  return m;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace ebgame::model
