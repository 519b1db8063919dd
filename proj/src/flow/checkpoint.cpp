#include "gspplan/flow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "gspplan/common/errors.hpp"
#include "gspplan/common/io.hpp"

namespace gspplan::flow {
namespace {

constexpr std::string_view kMagic = "GSPPLAN-CKPT 1\n";

void append_floats(std::string& out, const ParamVector& values) {
  for (float f : values) {
    auto bits = std::bit_cast<std::uint32_t>(f);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    char buf[4];
    std::memcpy(buf, &bits, 4);
    out.append(buf, 4);
  }
}

ParamVector read_floats(std::string_view bytes, std::size_t offset, std::size_t count) {
  ParamVector out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + offset + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const std::size_t n = ckpt.arch.param_count();
  if (ckpt.online.size() != n || ckpt.target.size() != n) {
    throw std::invalid_argument("checkpoint: parameter block does not match architecture");
  }
  nlohmann::json header = {{"architecture", ckpt.arch.to_json()},
                           {"meta", ckpt.meta},
                           {"step", ckpt.step},
                           {"rng_state", ckpt.rng_state},
                           {"param_count", n},
                           {"blocks", {"online", "target"}},
                           {"dtype", "float32-le"}};
  std::string out(kMagic);
  out += header.dump();
  out += '\n';
  append_floats(out, ckpt.online);
  append_floats(out, ckpt.target);
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const auto eol = bytes.find('\n', kMagic.size());
  if (eol == std::string_view::npos) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(bytes.substr(kMagic.size(), eol - kMagic.size()));
  Checkpoint ckpt;
  ckpt.arch = Architecture::from_json(header.at("architecture"));
  ckpt.meta = header.at("meta");
  ckpt.step = header.at("step").get<std::int64_t>();
  ckpt.rng_state = header.at("rng_state").get<std::string>();
  const auto n = header.at("param_count").get<std::size_t>();
  if (n != ckpt.arch.param_count()) throw std::runtime_error("checkpoint: parameter count does not match architecture");
  const std::size_t body = eol + 1;
  if (bytes.size() != body + 8 * n) throw std::runtime_error("checkpoint: parameter block has wrong size");
  ckpt.online = read_floats(bytes, body, n);
  ckpt.target = read_floats(bytes, body + 4 * n, n);
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace gspplan::flow
