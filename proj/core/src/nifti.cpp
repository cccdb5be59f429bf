#include "c2f/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "c2f/error.hpp"

namespace c2f {

NiftiDepthAxis nifti_depth_axis_from_string(const std::string& s) {
  if (s == "slowest") return NiftiDepthAxis::slowest;
  if (s == "fastest") return NiftiDepthAxis::fastest;
  throw Error("nifti depth axis must be 'slowest' or 'fastest', got '" + s + "'");
}

std::string to_string(NiftiDepthAxis a) { return a == NiftiDepthAxis::slowest ? "slowest" : "fastest"; }

namespace {

constexpr std::size_t kHeaderSize = 348;

enum : std::int16_t { kUint8 = 2, kInt16 = 4, kFloat32 = 16 };

class HeaderView {
 public:
  HeaderView(std::span<const unsigned char> bytes, bool swap) : b_(bytes), swap_(swap) {}

  std::int16_t i16(std::size_t off) const { return std::bit_cast<std::int16_t>(raw<std::uint16_t>(off)); }
  std::int32_t i32(std::size_t off) const { return std::bit_cast<std::int32_t>(raw<std::uint32_t>(off)); }
  float f32(std::size_t off) const { return std::bit_cast<float>(raw<std::uint32_t>(off)); }

  template <typename U>
  U raw(std::size_t off) const {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      const std::size_t k = swap_ ? sizeof(U) - 1 - i : i;
      v |= U(U(b_[off + k]) << (8 * i));
    }
    return v;
  }

 private:
  std::span<const unsigned char> b_;
  bool swap_;
};

struct Header {
  std::int16_t dim[8]{};
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  float pixdim[8]{};
  float vox_offset = 0.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::string magic;
  bool swapped = false;
};

std::string dump(const Header& h) {
  std::ostringstream os;
  os << "{dim=[";
  for (int i = 0; i < 8; ++i) os << (i ? "," : "") << h.dim[i];
  os << "] datatype=" << h.datatype << " bitpix=" << h.bitpix << " pixdim=[";
  for (int i = 0; i < 8; ++i) os << (i ? "," : "") << h.pixdim[i];
  os << "] vox_offset=" << h.vox_offset << " scl_slope=" << h.scl_slope
     << " scl_inter=" << h.scl_inter << " magic=\"" << h.magic << "\""
     << (h.swapped ? " big-endian" : "") << "}";
  return os.str();
}

Header parse_header(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("nifti: file shorter than the 348-byte header");
  std::int32_t sizeof_hdr = 0;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  Header h;
  const HeaderView le(bytes, false);
  const HeaderView be(bytes, true);
  const HeaderView* v = nullptr;
  if (le.i32(0) == 348) v = &le;
  else if (be.i32(0) == 348) v = &be, h.swapped = true;
  else throw FormatError("nifti: sizeof_hdr is not 348");

  for (int i = 0; i < 8; ++i) h.dim[i] = v->i16(40 + 2 * std::size_t(i));
  h.datatype = v->i16(70);
  h.bitpix = v->i16(72);
  for (int i = 0; i < 8; ++i) h.pixdim[i] = v->f32(76 + 4 * std::size_t(i));
  h.vox_offset = v->f32(108);
  h.scl_slope = v->f32(112);
  h.scl_inter = v->f32(116);
  h.magic.assign(reinterpret_cast<const char*>(bytes.data()) + 344, 3);
  return h;
}

std::vector<unsigned char> gunzip_or_copy(const std::string& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error("cannot open '" + path + "' for reading");
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
  int err = 0;
  const char* msg = gzerror(f, &err);
  const std::string message = msg ? msg : "";
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) {
    throw FormatError("nifti: decompression failed for '" + path + "': " + message);
  }
  return out;
}

}  // namespace

Volume3D decode_nifti(std::span<const unsigned char> bytes, NiftiDepthAxis axis) {
  const Header h = parse_header(bytes);
  auto reject = [&](const std::string& why) { throw FormatError("nifti: " + why + " " + dump(h)); };

  if (h.magic != "n+1") reject("only single-file NIfTI-1 (magic \"n+1\") is supported");
  const int ndim = h.dim[0];
  if (ndim < 3 || ndim > 7) reject("unsupported dimensionality");
  for (int i = 4; i <= ndim; ++i)
    if (h.dim[i] != 1) reject("only single-frame 3D volumes are supported");
  for (int i = 1; i <= 3; ++i)
    if (h.dim[i] < 1) reject("non-positive dimension");

  std::size_t elem = 0;
  switch (h.datatype) {
    case kUint8: elem = 1; break;
    case kInt16: elem = 2; break;
    case kFloat32: elem = 4; break;
    default: reject("unsupported datatype " + std::to_string(h.datatype));
  }
  if (h.bitpix != std::int16_t(8 * elem)) reject("bitpix does not match datatype");

  const std::size_t nx = std::size_t(h.dim[1]), ny = std::size_t(h.dim[2]), nz = std::size_t(h.dim[3]);
  const std::size_t n = nx * ny * nz;
  if (!(h.vox_offset >= float(kHeaderSize))) reject("vox_offset precedes the end of the header");
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  if (bytes.size() < offset + n * elem) reject("payload truncated");

  const bool scale = h.scl_slope != 0.0f && std::isfinite(h.scl_slope) && std::isfinite(h.scl_inter);
  const HeaderView data(bytes, h.swapped);
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = offset + i * elem;
    float v = 0.0f;
    switch (h.datatype) {
      case kUint8: v = float(bytes[off]); break;
      case kInt16: v = float(data.i16(off)); break;
      case kFloat32: v = data.f32(off); break;
    }
    values[i] = scale ? h.scl_slope * v + h.scl_inter : v;
  }

  const float px = std::fabs(h.pixdim[1]), py = std::fabs(h.pixdim[2]), pz = std::fabs(h.pixdim[3]);
  try {
    if (axis == NiftiDepthAxis::slowest) {
      // Stored x-fastest order is already (z, y, x) row-major.
      return Volume3D({nz, ny, nx}, Spacing(pz, py, px), std::move(values));
    }
    std::vector<float> t(n);
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) t[(x * ny + y) * nz + z] = values[(z * ny + y) * nx + x];
    return Volume3D({nx, ny, nz}, Spacing(px, py, pz), std::move(t));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    reject(e.what());
  }
  return {};
}

Volume3D read_nifti(const std::string& path, NiftiDepthAxis axis) {
  return decode_nifti(gunzip_or_copy(path), axis);
}

Mask3D read_nifti_mask(const std::string& path, NiftiDepthAxis axis) {
  const Volume3D v = read_nifti(path, axis);
  std::vector<std::uint8_t> m(v.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = v.data()[i] != 0.0f ? 1 : 0;
  return Mask3D(v.dims(), v.spacing(), std::move(m));
}

}  // namespace c2f
