#include <doctest.h>

#include <zlib.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "c2f/checksum.hpp"
#include "c2f/config.hpp"
#include "c2f/error.hpp"
#include "c2f/nifti.hpp"
#include "c2f/rvol.hpp"
#include "c2f/weights_io.hpp"
#include "support/oracles.hpp"

using namespace c2f;
namespace fs = std::filesystem;

namespace {

using Bytes = std::vector<unsigned char>;

void put_u32(Bytes& b, std::size_t off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[off + std::size_t(i)] = static_cast<unsigned char>(v >> (8 * i));
}

void reseal(Bytes& b) {
  const auto crc = c2f::crc32(std::span<const unsigned char>(b.data(), b.size() - 4));
  put_u32(b, b.size() - 4, crc);
}

std::string thrown(auto&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

fs::path temp_dir() {
  auto p = fs::temp_directory_path() / "c2f_unit";
  fs::create_directories(p);
  return p;
}

// NIfTI-1 single-file image, assembled field by field at the standard offsets.
Bytes nifti_golden(std::int16_t datatype, std::int16_t bitpix, const Bytes& payload, float slope = 0.0f,
                   float inter = 0.0f, std::array<std::int16_t, 3> dims = {2, 2, 2}) {
  Bytes b(352, 0);
  auto i16 = [&](std::size_t off, std::int16_t v) { std::memcpy(&b[off], &v, 2); };
  auto f32 = [&](std::size_t off, float v) { std::memcpy(&b[off], &v, 4); };
  put_u32(b, 0, 348);
  i16(40, 3);
  i16(42, dims[0]);
  i16(44, dims[1]);
  i16(46, dims[2]);
  i16(48, 1);
  i16(70, datatype);
  i16(72, bitpix);
  f32(76, 1.0f);
  f32(80, 0.7816f);
  f32(84, 0.7816f);
  f32(88, 3.0f);
  f32(108, 352.0f);
  f32(112, slope);
  f32(116, inter);
  std::memcpy(&b[344], "n+1\0", 4);
  b.resize(352 + payload.size());
  std::copy(payload.begin(), payload.end(), b.begin() + 352);
  return b;
}

Bytes int16_payload(const std::vector<std::int16_t>& v) {
  Bytes out(v.size() * 2);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

}  // namespace

TEST_CASE("rvol round trips bit-exactly") {
  const auto v = testing::random_volume({3, 4, 5}, {3, 0.7816f, 0.7816f}, 1);
  CHECK(std::get<Volume3D>(decode_rvol(encode_rvol(v))) == v);
  const auto m = testing::random_mask({4, 3, 2}, 0.5, 2);
  CHECK(std::get<Mask3D>(decode_rvol(encode_rvol(m))) == m);
  const auto dir = temp_dir();
  write_volume(v, (dir / "v.rvol").string());
  write_volume(m, (dir / "m.rvol").string());
  CHECK(read_volume((dir / "v.rvol").string()) == v);
  CHECK(read_mask((dir / "m.rvol").string()) == m);
  CHECK_THROWS_AS(read_mask((dir / "v.rvol").string()), FormatError);
  CHECK_THROWS_AS(read_volume((dir / "m.rvol").string()), FormatError);
}

TEST_CASE("rvol rejects damaged files") {
  const auto m = testing::random_mask({2, 2, 2}, 0.5, 3);
  const Bytes good = encode_rvol(m);

  Bytes crc = good;
  crc.back() ^= 0xFF;
  CHECK(thrown([&] { decode_rvol(crc); }).find("checksum mismatch") != std::string::npos);

  Bytes magic = good;
  magic[0] = 'X';
  CHECK(thrown([&] { decode_rvol(magic); }).find("bad magic") != std::string::npos);

  Bytes version = good;
  put_u32(version, 4, 9);
  reseal(version);
  CHECK(thrown([&] { decode_rvol(version); }).find("unsupported version") != std::string::npos);

  Bytes shortened(good.begin(), good.end() - 5);
  shortened.insert(shortened.end(), good.end() - 4, good.end());
  CHECK(thrown([&] { decode_rvol(shortened); }).find("length") != std::string::npos);

  Bytes two = good;
  two[33] = 2;
  reseal(two);
  CHECK(thrown([&] { decode_rvol(two); }).find("not 0 or 1") != std::string::npos);

  Bytes dtype = good;
  dtype[32] = 7;
  reseal(dtype);
  CHECK(thrown([&] { decode_rvol(dtype); }).find("dtype") != std::string::npos);
}

TEST_CASE("weights round trip and rejection") {
  const UNetSpec spec{1, 2, 2, 1};
  const auto w = init_weights(spec, 5);
  const Bytes b = encode_weights(w);
  CHECK(decode_weights(b) == w);
  CHECK(encode_weights(decode_weights(b)) == b);

  Bytes magic = b;
  magic[1] = 'x';
  CHECK(thrown([&] { decode_weights(magic); }).find("bad magic") != std::string::npos);

  // Cut inside the third parameter and re-seal so only the truncation is wrong.
  std::size_t cut = 4 + 4 + 4;
  for (int k = 0; k < 2; ++k) {
    const auto& p = w.params[std::size_t(k)];
    cut += 2 + p.name.size() + 1 + 4 * p.shape.size() + 4 * p.data.size();
  }
  Bytes trunc(b.begin(), b.begin() + long(cut + 5));
  trunc.resize(trunc.size() + 4);
  reseal(trunc);
  CHECK(thrown([&] { decode_weights(trunc); }).find("truncated at parameter 2") != std::string::npos);

  Bytes flipped = b;
  flipped[flipped.size() - 6] ^= 1;
  CHECK(thrown([&] { decode_weights(flipped); }).find("checksum mismatch") != std::string::npos);

  const auto path = (temp_dir() / "w.c2fw").string();
  save_weights(w, path);
  CHECK(load_weights(path) == w);
}

TEST_CASE("nifti golden int16 file") {
  const std::vector<std::int16_t> vals{1, 2, 3, 4, 5, 6, 7, -8};
  const auto v = decode_nifti(nifti_golden(4, 16, int16_payload(vals)));
  CHECK(v.dims() == Dims3{2, 2, 2});
  CHECK(v.spacing() == Spacing{3.0f, 0.7816f, 0.7816f});
  // Stored order is x fastest; (k, j, i) -> depth k, row j, col i.
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t i = 0; i < 2; ++i) CHECK(v.at(k, j, i) == float(vals[k * 4 + j * 2 + i]));

  const auto f = decode_nifti(nifti_golden(4, 16, int16_payload(vals)), NiftiDepthAxis::fastest);
  CHECK(f.spacing() == Spacing{0.7816f, 0.7816f, 3.0f});
  CHECK(f.at(1, 0, 0) == 2.0f);
  CHECK(f.at(0, 0, 1) == 5.0f);
}

TEST_CASE("nifti scaling, types and rejection") {
  const auto scaled = decode_nifti(nifti_golden(4, 16, int16_payload({0, 1, 2, 3, 4, 5, 6, 7}), 2.0f, -1.0f));
  CHECK(scaled.at(0, 0, 1) == 1.0f);
  CHECK(scaled.at(1, 1, 1) == 13.0f);

  Bytes u8{0, 1, 2, 0, 0, 0, 3, 255};
  CHECK(decode_nifti(nifti_golden(2, 8, u8)).at(1, 1, 1) == 255.0f);

  Bytes f(8 * 4);
  for (int i = 0; i < 8; ++i) {
    const float x = 0.5f * float(i);
    std::memcpy(&f[std::size_t(i) * 4], &x, 4);
  }
  CHECK(decode_nifti(nifti_golden(16, 32, f)).at(1, 1, 1) == 3.5f);

  const auto unsupported = thrown([&] { decode_nifti(nifti_golden(64, 64, Bytes(64))); });
  CHECK(unsupported.find("datatype=64") != std::string::npos);
  CHECK_THROWS_AS(decode_nifti(nifti_golden(4, 16, Bytes(10))), FormatError);
  CHECK_THROWS_AS(decode_nifti(Bytes(100)), FormatError);
}

TEST_CASE("gzip-wrapped nifti reads the same") {
  const Bytes raw = nifti_golden(4, 16, int16_payload({1, 0, 0, 2, 0, 3, 0, 0}));
  const auto dir = temp_dir();
  const auto plain = (dir / "g.nii").string();
  const auto packed = (dir / "g.nii.gz").string();
  std::ofstream(plain, std::ios::binary).write(reinterpret_cast<const char*>(raw.data()), long(raw.size()));
  gzFile gz = gzopen(packed.c_str(), "wb");
  REQUIRE(gz != nullptr);
  gzwrite(gz, raw.data(), unsigned(raw.size()));
  gzclose(gz);
  CHECK(read_nifti(plain) == read_nifti(packed));
  const auto m = read_nifti_mask(packed);
  CHECK(m.foreground_count() == 3);
}

TEST_CASE("config parsing") {
  const RunConfig defaults = parse_config("");
  CHECK(defaults.pipeline.normalized_spacing == Spacing{3.0f, 0.7816f, 0.7816f});
  CHECK(defaults.pipeline.coarse_dims == Dims2{128, 128});
  CHECK(defaults.pipeline.fine_dims == Dims2{160, 160});
  CHECK(defaults.pipeline.abnormal_dims == Dims2{64, 256});
  CHECK(defaults.pipeline.th_vn == 10000);

  const auto c = parse_config(
      "# desk\nepochs_fine = 7\nepochs = 3\ncoarse_rows = 64\nconnectivity = 6\n"
      "nifti_depth_axis = fastest\nretain_empty_slices = false\nclip_norm_abnormal = 0.25\n");
  CHECK(c.hyper(Stage::coarse).epochs == 3);
  CHECK(c.hyper(Stage::fine).epochs == 7);
  CHECK(c.hyper(Stage::fine).clip_norm == 0.0);
  CHECK(c.hyper(Stage::abnormal).clip_norm == 0.25);
  CHECK(c.pipeline.coarse_dims.rows == 64);
  CHECK(c.pipeline.connectivity == Connectivity::faces);
  CHECK(c.nifti_depth_axis == NiftiDepthAxis::fastest);
  CHECK_FALSE(c.retain_empty_slices);
  CHECK(parse_config(format_config(c)).pipeline.coarse_dims == c.pipeline.coarse_dims);
  CHECK(format_config(parse_config(format_config(c))) == format_config(c));

  CHECK(thrown([] { parse_config("\nbogus = 1\n"); }).find("line 2: unknown key 'bogus'") != std::string::npos);
  CHECK(thrown([] { parse_config("lr = 1\nlr = 2\n"); }).find("duplicate") != std::string::npos);
  CHECK(thrown([] { parse_config("lr\n"); }).find("line 1") != std::string::npos);
  CHECK_THROWS_AS(parse_config("epochs = three\n"), FormatError);
  CHECK_THROWS_AS(parse_config("connectivity = 8\n"), FormatError);
  CHECK_THROWS_AS(parse_config("prob_threshold = 1.5\n"), FormatError);
}
