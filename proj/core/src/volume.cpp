#include "c2f/volume.hpp"

#include <cmath>
#include <sstream>

#include "c2f/error.hpp"

namespace c2f {

Spacing::Spacing(float d_mm, float h_mm, float w_mm) : d(d_mm), h(h_mm), w(w_mm) {
  for (float v : {d, h, w}) {
    if (!(std::isfinite(v) && v > 0.0f)) {
      std::ostringstream os;
      os << "spacing must be positive and finite, got (" << d << ", " << h << ", " << w << ")";
      throw ShapeError(os.str());
    }
  }
}

std::string to_string(Plane p) { return p == Plane::axial ? "axial" : "sagittal"; }

std::string to_string(const Dims3& d) {
  std::ostringstream os;
  os << d.depth << "x" << d.rows << "x" << d.cols;
  return os.str();
}

std::string to_string(const Dims2& d) {
  std::ostringstream os;
  os << d.rows << "x" << d.cols;
  return os.str();
}

namespace detail {

template <typename T>
Grid3<T>::Grid3(Dims3 dims, Spacing spacing, std::vector<T> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  if (dims_.depth == 0 || dims_.rows == 0 || dims_.cols == 0) {
    throw ShapeError("volume dims must be positive, got " + to_string(dims_));
  }
  if (data_.size() != dims_.count()) {
    std::ostringstream os;
    os << "volume data length " << data_.size() << " does not match dims " << to_string(dims_);
    throw ShapeError(os.str());
  }
  // Re-run spacing validation for aggregates built field by field.
  spacing_ = Spacing(spacing.d, spacing.h, spacing.w);
}

template class Grid3<float>;
template class Grid3<std::uint8_t>;

}  // namespace detail

Volume3D::Volume3D(Dims3 dims, Spacing spacing, std::vector<float> data)
    : Grid3(dims, spacing, std::move(data)) {
  for (float v : data_) {
    if (!std::isfinite(v)) throw ShapeError("volume contains a non-finite value");
  }
}

Volume3D::Volume3D(Dims3 dims, Spacing spacing)
    : Volume3D(dims, spacing, std::vector<float>(dims.count(), 0.0f)) {}

Mask3D::Mask3D(Dims3 dims, Spacing spacing, std::vector<std::uint8_t> data)
    : Grid3(dims, spacing, std::move(data)) {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] > 1) {
      std::ostringstream os;
      os << "mask value " << int(data_[i]) << " at offset " << i << " is not 0 or 1";
      throw ShapeError(os.str());
    }
  }
}

Mask3D::Mask3D(Dims3 dims, Spacing spacing)
    : Mask3D(dims, spacing, std::vector<std::uint8_t>(dims.count(), 0)) {}

std::size_t Mask3D::foreground_count() const noexcept {
  std::size_t n = 0;
  for (auto v : data_) n += v;
  return n;
}

Slice2D::Slice2D(Dims2 dims, PixelSpacing spacing, std::vector<float> data, Plane plane,
                 std::size_t index)
    : dims_(dims), spacing_(spacing), data_(std::move(data)), plane_(plane), index_(index) {
  if (dims_.rows == 0 || dims_.cols == 0) {
    throw ShapeError("slice dims must be positive, got " + to_string(dims_));
  }
  if (data_.size() != dims_.count()) {
    std::ostringstream os;
    os << "slice data length " << data_.size() << " does not match dims " << to_string(dims_);
    throw ShapeError(os.str());
  }
  if (!(spacing_.row > 0.0 && spacing_.col > 0.0)) {
    throw ShapeError("slice pixel spacing must be positive");
  }
}

Slice2D::Slice2D(Dims2 dims, PixelSpacing spacing, Plane plane, std::size_t index)
    : Slice2D(dims, spacing, std::vector<float>(dims.count(), 0.0f), plane, index) {}

Slice2D Slice2D::with_geometry(PixelSpacing spacing, Plane plane, std::size_t index) const {
  return Slice2D(dims_, spacing, data_, plane, index);
}

ProbMap2D::ProbMap2D(Slice2D slice) : slice_(std::move(slice)) {
  for (float v : slice_.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ShapeError("probability outside [0, 1]");
  }
}

std::size_t slice_count(const Dims3& dims, Plane plane) {
  return plane == Plane::axial ? dims.depth : dims.cols;
}

Dims2 slice_dims(const Dims3& dims, Plane plane) {
  return plane == Plane::axial ? Dims2{dims.rows, dims.cols} : Dims2{dims.depth, dims.rows};
}

namespace {

PixelSpacing plane_spacing(const Spacing& s, Plane plane) {
  return plane == Plane::axial ? PixelSpacing{s.h, s.w} : PixelSpacing{s.d, s.h};
}

template <typename Grid>
std::vector<Slice2D> extract_impl(const Grid& g, Plane plane) {
  const Dims3& d = g.dims();
  const auto src = g.data();
  const std::size_t n = slice_count(d, plane);
  const Dims2 sd = slice_dims(d, plane);
  const PixelSpacing ps = plane_spacing(g.spacing(), plane);

  std::vector<Slice2D> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<float> buf(sd.count());
    if (plane == Plane::axial) {
      const std::size_t base = k * d.rows * d.cols;
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(src[base + i]);
    } else {
      for (std::size_t z = 0; z < d.depth; ++z)
        for (std::size_t r = 0; r < d.rows; ++r)
          buf[z * d.rows + r] = static_cast<float>(src[g.index(z, r, k)]);
    }
    out.emplace_back(sd, ps, std::move(buf), plane, k);
  }
  return out;
}

template <typename T>
std::vector<T> compose_impl(std::span<const Slice2D> slices, Plane plane, const Dims3& dims,
                            bool require_binary) {
  const std::size_t n = slice_count(dims, plane);
  const Dims2 sd = slice_dims(dims, plane);
  if (slices.size() != n) {
    std::ostringstream os;
    os << "compose: " << slices.size() << " " << to_string(plane) << " slices supplied, volume "
       << to_string(dims) << " needs " << n;
    throw ShapeError(os.str());
  }
  std::vector<T> out(dims.count());
  for (std::size_t k = 0; k < n; ++k) {
    const Slice2D& s = slices[k];
    if (s.dims() != sd) {
      std::ostringstream os;
      os << "compose: slice " << k << " has dims " << to_string(s.dims()) << ", expected "
         << to_string(sd);
      throw ShapeError(os.str());
    }
    const auto src = s.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      const float v = src[i];
      if (require_binary && v != 0.0f && v != 1.0f) {
        throw ShapeError("compose_mask: slice " + std::to_string(k) + " holds a non-binary value");
      }
      std::size_t dst;
      if (plane == Plane::axial) {
        dst = k * sd.count() + i;
      } else {
        const std::size_t z = i / dims.rows;
        const std::size_t r = i % dims.rows;
        dst = (z * dims.rows + r) * dims.cols + k;
      }
      out[dst] = static_cast<T>(v);
    }
  }
  return out;
}

}  // namespace

std::vector<Slice2D> extract_slices(const Volume3D& vol, Plane plane) {
  return extract_impl(vol, plane);
}

std::vector<Slice2D> extract_slices(const Mask3D& mask, Plane plane) {
  return extract_impl(mask, plane);
}

Volume3D compose_volume(std::span<const Slice2D> slices, Plane plane, Dims3 dims, Spacing spacing) {
  return Volume3D(dims, spacing, compose_impl<float>(slices, plane, dims, false));
}

Mask3D compose_mask(std::span<const Slice2D> slices, Plane plane, Dims3 dims, Spacing spacing) {
  return Mask3D(dims, spacing, compose_impl<std::uint8_t>(slices, plane, dims, true));
}

double voxel_volume_ml(const Spacing& spacing, std::size_t n_voxels) {
  return static_cast<double>(n_voxels) * double(spacing.d) * double(spacing.h) *
         double(spacing.w) / 1000.0;
}

namespace {
void check_threshold(float threshold) {
  if (!(threshold > 0.0f && threshold < 1.0f)) {
    throw Error("binarize threshold must lie in (0, 1)");
  }
}
}  // namespace

Slice2D binarize(const ProbMap2D& prob, float threshold) {
  check_threshold(threshold);
  const Slice2D& s = prob.slice();
  std::vector<float> out(s.data().size());
  const auto src = s.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i] >= threshold ? 1.0f : 0.0f;
  return Slice2D(s.dims(), s.pixel_spacing(), std::move(out), s.plane(), s.index());
}

Mask3D binarize(const Volume3D& prob, float threshold) {
  check_threshold(threshold);
  std::vector<std::uint8_t> out(prob.size());
  const auto src = prob.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i] >= threshold ? 1 : 0;
  return Mask3D(prob.dims(), prob.spacing(), std::move(out));
}

Mask3D mask_union(const Mask3D& a, const Mask3D& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("mask_union: dims " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] | b.data()[i];
  return Mask3D(a.dims(), a.spacing(), std::move(out));
}

}  // namespace c2f
