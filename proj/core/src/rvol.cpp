#include "c2f/rvol.hpp"

#include <sstream>

#include "byte_io.hpp"
#include "c2f/error.hpp"

namespace c2f {

namespace {

void write_header(io::ByteWriter& out, const Dims3& d, const Spacing& s, RvolType type) {
  out.bytes("RVOL");
  out.u32(kRvolVersion);
  out.u32(static_cast<std::uint32_t>(d.depth));
  out.u32(static_cast<std::uint32_t>(d.rows));
  out.u32(static_cast<std::uint32_t>(d.cols));
  out.f32(s.d);
  out.f32(s.h);
  out.f32(s.w);
  out.u8(static_cast<std::uint8_t>(type));
}

}  // namespace

std::vector<unsigned char> encode_rvol(const Volume3D& vol) {
  io::ByteWriter out;
  write_header(out, vol.dims(), vol.spacing(), RvolType::intensity);
  for (float v : vol.data()) out.f32(v);
  out.append_crc();
  return out.buffer();
}

std::vector<unsigned char> encode_rvol(const Mask3D& mask) {
  io::ByteWriter out;
  write_header(out, mask.dims(), mask.spacing(), RvolType::mask);
  for (auto v : mask.data()) out.u8(v);
  out.append_crc();
  return out.buffer();
}

AnyVolume decode_rvol(std::span<const unsigned char> bytes) {
  constexpr std::size_t kHeader = 4 + 4 + 12 + 12 + 1;
  io::ByteReader in(bytes);
  if (!in.has(4)) throw FormatError("rvol: truncated header");
  if (in.bytes(4) != "RVOL") throw FormatError("rvol: bad magic (expected \"RVOL\")");
  if (!in.has(kHeader - 4)) throw FormatError("rvol: truncated header");
  const std::uint32_t version = in.u32();
  if (version != kRvolVersion) throw FormatError("rvol: unsupported version " + std::to_string(version));
  Dims3 d;
  d.depth = in.u32();
  d.rows = in.u32();
  d.cols = in.u32();
  const float sd = in.f32(), sh = in.f32(), sw = in.f32();
  const std::uint8_t dtype = in.u8();
  if (dtype > 1) throw FormatError("rvol: unknown dtype code " + std::to_string(dtype));

  const std::size_t elem = dtype == 0 ? 4 : 1;
  const std::size_t expected = d.count() * elem;
  if (in.remaining() != expected + 4) {
    std::ostringstream os;
    os << "rvol: payload length mismatch (dims " << to_string(d) << " need " << expected
       << " bytes + 4 checksum, file has " << in.remaining() << ")";
    throw FormatError(os.str());
  }
  io::verified_body(bytes, "rvol");

  try {
    const Spacing spacing(sd, sh, sw);
    if (dtype == 0) {
      std::vector<float> data(d.count());
      for (auto& v : data) v = in.f32();
      return Volume3D(d, spacing, std::move(data));
    }
    std::vector<std::uint8_t> data(d.count());
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = in.u8();
      if (data[i] > 1) {
        throw FormatError("rvol: mask payload value " + std::to_string(data[i]) + " at voxel " +
                          std::to_string(i) + " is not 0 or 1");
      }
    }
    return Mask3D(d, spacing, std::move(data));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("rvol: ") + e.what());
  }
}

void write_volume(const Volume3D& vol, const std::string& path) { io::write_file(path, encode_rvol(vol)); }
void write_volume(const Mask3D& mask, const std::string& path) { io::write_file(path, encode_rvol(mask)); }

AnyVolume read_rvol(const std::string& path) {
  try {
    return decode_rvol(io::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Volume3D read_volume(const std::string& path) {
  auto v = read_rvol(path);
  if (auto* vol = std::get_if<Volume3D>(&v)) return std::move(*vol);
  throw FormatError(path + ": expected an intensity volume (dtype 0), found a mask");
}

Mask3D read_mask(const std::string& path) {
  auto v = read_rvol(path);
  if (auto* m = std::get_if<Mask3D>(&v)) return std::move(*m);
  throw FormatError(path + ": expected a mask (dtype 1), found an intensity volume");
}

}  // namespace c2f
