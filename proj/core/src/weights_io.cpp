#include "c2f/weights_io.hpp"

#include <limits>

#include "byte_io.hpp"
#include "c2f/error.hpp"

namespace c2f {

std::vector<unsigned char> encode_weights(const ModelWeights& w) {
  io::ByteWriter out;
  out.bytes("C2FW");
  out.u32(kWeightsVersion);
  out.u32(static_cast<std::uint32_t>(w.params.size()));
  for (const auto& p : w.params) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("parameter name too long: " + p.name.substr(0, 32) + "...");
    }
    if (p.shape.size() > 255) throw FormatError("parameter '" + p.name + "' rank exceeds 255");
    out.u16(static_cast<std::uint16_t>(p.name.size()));
    out.bytes(p.name);
    out.u8(static_cast<std::uint8_t>(p.shape.size()));
    std::size_t n = 1;
    for (auto d : p.shape) {
      out.u32(d);
      n *= d;
    }
    if (n != p.data.size()) throw FormatError("parameter '" + p.name + "' shape/data mismatch");
    for (float v : p.data) out.f32(v);
  }
  out.append_crc();
  return out.buffer();
}

ModelWeights decode_weights(std::span<const unsigned char> bytes) {
  io::ByteReader in(bytes);
  if (!in.has(4)) throw FormatError("weights: truncated in header");
  if (in.bytes(4) != "C2FW") throw FormatError("weights: bad magic (expected \"C2FW\")");
  if (!in.has(8)) throw FormatError("weights: truncated in header");
  const std::uint32_t version = in.u32();
  if (version != kWeightsVersion) {
    throw FormatError("weights: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();

  ModelWeights w;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string where = "weights: truncated at parameter " + std::to_string(k);
    if (!in.has(2)) throw FormatError(where);
    const std::uint16_t name_len = in.u16();
    if (!in.has(std::size_t(name_len) + 1)) throw FormatError(where);
    Parameter<float> p;
    p.name = in.bytes(name_len);
    const std::uint8_t rank = in.u8();
    if (!in.has(4 * std::size_t(rank))) throw FormatError(where);
    std::size_t n = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      p.shape.push_back(in.u32());
      n *= p.shape.back();
    }
    if (n > in.remaining() / 4) throw FormatError(where);
    p.data.resize(n);
    for (auto& v : p.data) v = in.f32();
    for (const auto& q : w.params) {
      if (q.name == p.name) throw FormatError("weights: duplicate parameter name '" + p.name + "'");
    }
    w.params.push_back(std::move(p));
  }
  if (in.remaining() < 4) throw FormatError("weights: truncated (checksum trailer)");
  if (in.remaining() > 4) throw FormatError("weights: unexpected trailing bytes");
  io::verified_body(bytes, "weights");
  return w;
}

void save_weights(const ModelWeights& w, const std::string& path) {
  io::write_file(path, encode_weights(w));
}

ModelWeights load_weights(const std::string& path) { return decode_weights(io::read_file(path)); }

}  // namespace c2f
