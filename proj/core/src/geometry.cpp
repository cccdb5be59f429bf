#include "c2f/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "c2f/error.hpp"

namespace c2f {

namespace {

std::size_t scaled_extent(std::size_t n, double src_mm, double dst_mm) {
  const double exact = double(n) * src_mm / dst_mm;
  const auto rounded = static_cast<std::size_t>(std::floor(exact + 0.5));
  return std::max<std::size_t>(rounded, 1);
}

struct Tap {
  std::size_t lo;
  std::size_t hi;
  float frac;
};

// Linear tap for a continuous source coordinate, clamped to [0, n-1].
Tap linear_tap(double x, std::size_t n) {
  if (x <= 0.0) return {0, 0, 0.0f};
  const double last = double(n - 1);
  if (x >= last) return {n - 1, n - 1, 0.0f};
  const double fl = std::floor(x);
  const auto lo = static_cast<std::size_t>(fl);
  return {lo, std::min(lo + 1, n - 1), static_cast<float>(x - fl)};
}

// Half-up nearest index, clamped.
std::size_t nearest_index(double x, std::size_t n) {
  const double r = std::floor(x + 0.5);
  if (r <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(r), n - 1);
}

inline float lerp(float a, float b, float t) { return a + t * (b - a); }

template <typename T>
std::vector<T> resample_grid(std::span<const T> src, const Dims3& sd, const Spacing& ss,
                             const Dims3& od, const Spacing& os, Interp mode) {
  // Per-axis source coordinate of each output index.
  auto coords = [](std::size_t n_out, double out_mm, double src_mm) {
    // ratio first: equal spacings give exactly 1.0 and integer coordinates.
    const double ratio = out_mm / src_mm;
    std::vector<double> x(n_out);
    for (std::size_t i = 0; i < n_out; ++i) x[i] = double(i) * ratio;
    return x;
  };
  const auto xz = coords(od.depth, os.d, ss.d);
  const auto xr = coords(od.rows, os.h, ss.h);
  const auto xc = coords(od.cols, os.w, ss.w);
  auto at = [&](std::size_t z, std::size_t r, std::size_t c) {
    return src[(z * sd.rows + r) * sd.cols + c];
  };

  std::vector<T> out(od.count());
  if (mode == Interp::nearest) {
    std::vector<std::size_t> nz(od.depth), nr(od.rows), nc(od.cols);
    for (std::size_t i = 0; i < od.depth; ++i) nz[i] = nearest_index(xz[i], sd.depth);
    for (std::size_t i = 0; i < od.rows; ++i) nr[i] = nearest_index(xr[i], sd.rows);
    for (std::size_t i = 0; i < od.cols; ++i) nc[i] = nearest_index(xc[i], sd.cols);
    std::size_t k = 0;
    for (std::size_t z = 0; z < od.depth; ++z)
      for (std::size_t r = 0; r < od.rows; ++r)
        for (std::size_t c = 0; c < od.cols; ++c) out[k++] = at(nz[z], nr[r], nc[c]);
    return out;
  }

  std::vector<Tap> tz(od.depth), tr(od.rows), tc(od.cols);
  for (std::size_t i = 0; i < od.depth; ++i) tz[i] = linear_tap(xz[i], sd.depth);
  for (std::size_t i = 0; i < od.rows; ++i) tr[i] = linear_tap(xr[i], sd.rows);
  for (std::size_t i = 0; i < od.cols; ++i) tc[i] = linear_tap(xc[i], sd.cols);
  std::size_t k = 0;
  for (std::size_t z = 0; z < od.depth; ++z) {
    const Tap& a = tz[z];
    for (std::size_t r = 0; r < od.rows; ++r) {
      const Tap& b = tr[r];
      for (std::size_t c = 0; c < od.cols; ++c) {
        const Tap& g = tc[c];
        const float c00 = lerp(float(at(a.lo, b.lo, g.lo)), float(at(a.lo, b.lo, g.hi)), g.frac);
        const float c01 = lerp(float(at(a.lo, b.hi, g.lo)), float(at(a.lo, b.hi, g.hi)), g.frac);
        const float c10 = lerp(float(at(a.hi, b.lo, g.lo)), float(at(a.hi, b.lo, g.hi)), g.frac);
        const float c11 = lerp(float(at(a.hi, b.hi, g.lo)), float(at(a.hi, b.hi, g.hi)), g.frac);
        const float c0 = lerp(c00, c01, b.frac);
        const float c1 = lerp(c10, c11, b.frac);
        out[k++] = static_cast<T>(lerp(c0, c1, a.frac));
      }
    }
  }
  return out;
}

// Pixel-center aligned source coordinate for resizing n_src -> n_dst.
double resize_coord(std::size_t i, std::size_t n_src, std::size_t n_dst) {
  return (double(i) + 0.5) * double(n_src) / double(n_dst) - 0.5;
}

std::vector<float> resize_plane(std::span<const float> src, Dims2 sd, Dims2 dd, Interp mode) {
  std::vector<float> out(dd.count());
  if (mode == Interp::nearest) {
    // floor of the pixel-center coordinate + 0.5 picks the source pixel
    // whose footprint contains the destination center.
    std::vector<std::size_t> nr(dd.rows), nc(dd.cols);
    for (std::size_t i = 0; i < dd.rows; ++i) nr[i] = nearest_index(resize_coord(i, sd.rows, dd.rows), sd.rows);
    for (std::size_t i = 0; i < dd.cols; ++i) nc[i] = nearest_index(resize_coord(i, sd.cols, dd.cols), sd.cols);
    for (std::size_t r = 0; r < dd.rows; ++r)
      for (std::size_t c = 0; c < dd.cols; ++c) out[r * dd.cols + c] = src[nr[r] * sd.cols + nc[c]];
    return out;
  }
  std::vector<Tap> tr(dd.rows), tc(dd.cols);
  for (std::size_t i = 0; i < dd.rows; ++i) tr[i] = linear_tap(resize_coord(i, sd.rows, dd.rows), sd.rows);
  for (std::size_t i = 0; i < dd.cols; ++i) tc[i] = linear_tap(resize_coord(i, sd.cols, dd.cols), sd.cols);
  for (std::size_t r = 0; r < dd.rows; ++r) {
    const Tap& a = tr[r];
    const float* lo = src.data() + a.lo * sd.cols;
    const float* hi = src.data() + a.hi * sd.cols;
    for (std::size_t c = 0; c < dd.cols; ++c) {
      const Tap& b = tc[c];
      const float top = lerp(lo[b.lo], lo[b.hi], b.frac);
      const float bot = lerp(hi[b.lo], hi[b.hi], b.frac);
      out[r * dd.cols + c] = lerp(top, bot, a.frac);
    }
  }
  return out;
}

}  // namespace

Dims3 resampled_dims(const Dims3& dims, const Spacing& source, const Spacing& target) {
  if (dims.count() == 0) throw ShapeError("cannot resample an empty volume");
  return {scaled_extent(dims.depth, source.d, target.d), scaled_extent(dims.rows, source.h, target.h),
          scaled_extent(dims.cols, source.w, target.w)};
}

Volume3D resample_volume_to(const Volume3D& vol, const Spacing& target, const Dims3& dims,
                            Interp mode) {
  const Spacing checked(target.d, target.h, target.w);
  if (dims.count() == 0) throw ShapeError("resample: degenerate output dims " + to_string(dims));
  return Volume3D(dims, checked,
                  resample_grid<float>(vol.data(), vol.dims(), vol.spacing(), dims, checked, mode));
}

Mask3D resample_mask_to(const Mask3D& mask, const Spacing& target, const Dims3& dims) {
  const Spacing checked(target.d, target.h, target.w);
  if (dims.count() == 0) throw ShapeError("resample: degenerate output dims " + to_string(dims));
  return Mask3D(dims, checked,
                resample_grid<std::uint8_t>(mask.data(), mask.dims(), mask.spacing(), dims, checked,
                                            Interp::nearest));
}

Volume3D resample_volume(const Volume3D& vol, const Spacing& target, Interp mode) {
  const Spacing checked(target.d, target.h, target.w);
  return resample_volume_to(vol, checked, resampled_dims(vol.dims(), vol.spacing(), checked), mode);
}

Mask3D resample_mask(const Mask3D& mask, const Spacing& target) {
  const Spacing checked(target.d, target.h, target.w);
  return resample_mask_to(mask, checked, resampled_dims(mask.dims(), mask.spacing(), checked));
}

std::pair<Slice2D, ResizeRecord> resize_slice(const Slice2D& s, Dims2 target, Interp mode) {
  if (target.rows == 0 || target.cols == 0) {
    throw ShapeError("resize target dims must be positive, got " + to_string(target));
  }
  const ResizeRecord rec{s.dims(), target, s.pixel_spacing()};
  const PixelSpacing ps{s.pixel_spacing().row * double(s.rows()) / double(target.rows),
                        s.pixel_spacing().col * double(s.cols()) / double(target.cols)};
  if (target == s.dims()) {
    return {s.with_geometry(ps, s.plane(), s.index()), rec};
  }
  return {Slice2D(target, ps, resize_plane(s.data(), s.dims(), target, mode), s.plane(), s.index()),
          rec};
}

Slice2D unresize(const Slice2D& s, const ResizeRecord& rec, Interp mode) {
  if (s.dims() != rec.target_dims) {
    throw ShapeError("unresize: input dims " + to_string(s.dims()) + " differ from record target " +
                     to_string(rec.target_dims));
  }
  if (rec.original_dims == rec.target_dims) {
    return s.with_geometry(rec.original_pixel_spacing, s.plane(), s.index());
  }
  return Slice2D(rec.original_dims, rec.original_pixel_spacing,
                 resize_plane(s.data(), s.dims(), rec.original_dims, mode), s.plane(), s.index());
}

ProbMap2D unresize(const ProbMap2D& p, const ResizeRecord& rec, Interp mode) {
  // Linear and nearest interpolation both stay inside the input's [min, max].
  return ProbMap2D(unresize(p.slice(), rec, mode));
}

std::pair<Slice2D, CropRecord> crop_patch(const Slice2D& s, Pixel center, Dims2 patch_dims) {
  if (patch_dims.rows == 0 || patch_dims.cols == 0) {
    throw ShapeError("crop patch dims must be positive, got " + to_string(patch_dims));
  }
  if (center.row < 0 || center.col < 0 || center.row >= long(s.rows()) ||
      center.col >= long(s.cols())) {
    std::ostringstream os;
    os << "crop center (" << center.row << ", " << center.col << ") outside slice "
       << to_string(s.dims());
    throw ShapeError(os.str());
  }
  CropRecord rec{s.plane(), center, patch_dims, s.dims(), {}};
  const Pixel o = rec.origin();
  const long rows = long(patch_dims.rows), cols = long(patch_dims.cols);
  const long src_rows = long(s.rows()), src_cols = long(s.cols());
  rec.pad.top = std::size_t(std::max(0L, -o.row));
  rec.pad.left = std::size_t(std::max(0L, -o.col));
  rec.pad.bottom = std::size_t(std::max(0L, o.row + rows - src_rows));
  rec.pad.right = std::size_t(std::max(0L, o.col + cols - src_cols));

  Slice2D out(patch_dims, s.pixel_spacing(), s.plane(), s.index());
  for (long r = 0; r < rows; ++r) {
    const long sr = o.row + r;
    if (sr < 0 || sr >= src_rows) continue;
    for (long c = 0; c < cols; ++c) {
      const long sc = o.col + c;
      if (sc < 0 || sc >= src_cols) continue;
      out.at(std::size_t(r), std::size_t(c)) = s.at(std::size_t(sr), std::size_t(sc));
    }
  }
  return {std::move(out), rec};
}

Slice2D uncrop_patch(const Slice2D& p, const CropRecord& rec) {
  if (p.dims() != rec.patch_dims) {
    throw ShapeError("uncrop: patch dims " + to_string(p.dims()) + " differ from record " +
                     to_string(rec.patch_dims));
  }
  Slice2D out(rec.source_dims, p.pixel_spacing(), p.plane(), p.index());
  const Pixel o = rec.origin();
  const long rows = long(rec.patch_dims.rows), cols = long(rec.patch_dims.cols);
  for (long r = 0; r < rows; ++r) {
    const long sr = o.row + r;
    if (sr < 0 || sr >= long(rec.source_dims.rows)) continue;
    for (long c = 0; c < cols; ++c) {
      const long sc = o.col + c;
      if (sc < 0 || sc >= long(rec.source_dims.cols)) continue;
      out.at(std::size_t(sr), std::size_t(sc)) = p.at(std::size_t(r), std::size_t(c));
    }
  }
  return out;
}

ProbMap2D uncrop_patch(const ProbMap2D& p, const CropRecord& rec) {
  return ProbMap2D(uncrop_patch(p.slice(), rec));
}

}  // namespace c2f
