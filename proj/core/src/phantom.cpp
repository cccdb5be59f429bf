#include "c2f/phantom.hpp"

#include <cmath>
#include <sstream>

#include "c2f/error.hpp"
#include "rng.hpp"

namespace c2f {

namespace {

bool inside(const Ellipsoid& e, const Spacing& s, std::size_t z, std::size_t r, std::size_t c) {
  const double dz = (double(z) - e.center[0]) * s.d / e.semi_axes_mm[0];
  const double dr = (double(r) - e.center[1]) * s.h / e.semi_axes_mm[1];
  const double dc = (double(c) - e.center[2]) * s.w / e.semi_axes_mm[2];
  return dz * dz + dr * dr + dc * dc <= 1.0;
}

void check_fits(const Ellipsoid& e, const PhantomSpec& spec, std::size_t k) {
  const double spacing[3] = {spec.spacing.d, spec.spacing.h, spec.spacing.w};
  const std::size_t extent[3] = {spec.dims.depth, spec.dims.rows, spec.dims.cols};
  for (int a = 0; a < 3; ++a) {
    if (!(e.semi_axes_mm[a] > 0.0)) throw Error("phantom: semi-axes must be positive");
    const double half = e.semi_axes_mm[a] / spacing[a];
    if (e.center[a] - half < 0.0 || e.center[a] + half > double(extent[a] - 1)) {
      std::ostringstream os;
      os << "phantom: kidney " << k << " does not fit inside the volume along axis " << a;
      throw Error(os.str());
    }
  }
}

}  // namespace

Phantom render_phantom(const PhantomSpec& spec, const std::vector<Ellipsoid>& kidneys) {
  if (spec.kidney_intensity == spec.background_intensity) {
    throw Error("phantom: kidney and background intensities must differ");
  }
  if (!(spec.noise_sigma >= 0.0f)) throw Error("phantom: noise sigma must be non-negative");
  for (std::size_t k = 0; k < kidneys.size(); ++k) check_fits(kidneys[k], spec, k);

  const Dims3& d = spec.dims;
  std::vector<std::uint8_t> mask(d.count(), 0);
  std::size_t i = 0;
  for (std::size_t z = 0; z < d.depth; ++z)
    for (std::size_t r = 0; r < d.rows; ++r)
      for (std::size_t c = 0; c < d.cols; ++c, ++i) {
        int hits = 0;
        for (const auto& e : kidneys) hits += inside(e, spec.spacing, z, r, c) ? 1 : 0;
        if (hits > 1) throw Error("phantom: kidney ellipsoids overlap");
        mask[i] = std::uint8_t(hits);
      }

  // Noise stream is independent of the placement stream.
  SplitMix64 noise(spec.seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL);
  std::vector<float> image(d.count());
  for (std::size_t j = 0; j < image.size(); ++j) {
    const float base = mask[j] ? spec.kidney_intensity : spec.background_intensity;
    image[j] = spec.noise_sigma > 0.0f ? base + spec.noise_sigma * float(noise.normal()) : base;
  }
  return {Volume3D(d, spec.spacing, std::move(image)), Mask3D(d, spec.spacing, std::move(mask)),
          kidneys};
}

Phantom generate_phantom(const PhantomSpec& spec) {
  if (spec.n_kidneys != 1 && spec.n_kidneys != 2) throw Error("phantom: n_kidneys must be 1 or 2");
  SplitMix64 rng(spec.seed);
  const Dims3& d = spec.dims;
  const double jd = spec.center_jitter[0], jr = spec.center_jitter[1], jc = spec.center_jitter[2];
  const double cz = double(d.depth - 1) / 2.0;
  const double cr = double(d.rows - 1) / 2.0;
  const double lateral[2] = {0.30 * double(d.cols - 1), 0.70 * double(d.cols - 1)};

  // Consume the same number of draws regardless of n_kidneys so the geometry
  // of a given seed does not depend on the count.
  std::vector<Ellipsoid> all;
  for (int k = 0; k < 2; ++k) {
    Ellipsoid e;
    for (int a = 0; a < 3; ++a)
      e.semi_axes_mm[a] = rng.uniform(spec.semi_axes_mm[a].min, spec.semi_axes_mm[a].max);
    e.center = {cz + rng.uniform(-jd, jd), cr + rng.uniform(-jr, jr),
                lateral[k] + rng.uniform(-jc, jc)};
    all.push_back(e);
  }
  const std::uint64_t side = rng.below(2);
  std::vector<Ellipsoid> kidneys;
  if (spec.n_kidneys == 2) kidneys = all;
  else kidneys.push_back(all[side]);
  return render_phantom(spec, kidneys);
}

}  // namespace c2f
