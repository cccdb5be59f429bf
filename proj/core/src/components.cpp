#include "c2f/components.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "c2f/error.hpp"

namespace c2f {

Connectivity connectivity_from_int(int n) {
  if (n == 6) return Connectivity::faces;
  if (n == 26) return Connectivity::full;
  throw Error("connectivity must be 6 or 26, got " + std::to_string(n));
}

const char* to_string(Verdict v) { return v == Verdict::normal ? "Normal" : "Abnormal"; }

LabelMap3D::LabelMap3D(Dims3 dims, Spacing spacing, std::vector<std::uint32_t> labels,
                       std::uint32_t n_components)
    : dims_(dims), spacing_(spacing), labels_(std::move(labels)), n_components_(n_components) {
  if (labels_.size() != dims_.count()) throw ShapeError("label map length does not match dims");
}

namespace {

class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(std::uint32_t(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller root wins so roots stay ordered by creation.
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

struct Offset {
  int dz, dr, dc;
};

// Neighbors already visited in raster order (z, r, c).
std::vector<Offset> backward_neighbors(Connectivity conn) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 0; ++dz)
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const bool earlier = dz < 0 || (dz == 0 && (dr < 0 || (dr == 0 && dc < 0)));
        if (!earlier) continue;
        const int manhattan = std::abs(dz) + std::abs(dr) + std::abs(dc);
        if (conn == Connectivity::faces && manhattan != 1) continue;
        out.push_back({dz, dr, dc});
      }
  return out;
}

}  // namespace

LabelMap3D label_components(const Mask3D& mask, Connectivity conn) {
  const Dims3& d = mask.dims();
  const auto src = mask.data();
  const auto nbrs = backward_neighbors(conn);

  // Provisional labels are 1-based; 0 is background. Set element i <-> label i+1.
  std::vector<std::uint32_t> prov(src.size(), 0);
  DisjointSet sets;
  for (std::size_t z = 0; z < d.depth; ++z) {
    for (std::size_t r = 0; r < d.rows; ++r) {
      for (std::size_t c = 0; c < d.cols; ++c) {
        const std::size_t i = mask.index(z, r, c);
        if (!src[i]) continue;
        std::uint32_t label = 0;
        for (const Offset& o : nbrs) {
          const long nz = long(z) + o.dz, nr = long(r) + o.dr, nc = long(c) + o.dc;
          if (nz < 0 || nr < 0 || nc < 0 || nr >= long(d.rows) || nc >= long(d.cols)) continue;
          const std::uint32_t nl = prov[mask.index(std::size_t(nz), std::size_t(nr), std::size_t(nc))];
          if (nl == 0) continue;
          if (label == 0) label = nl;
          else sets.unite(label - 1, nl - 1);
        }
        if (label == 0) label = sets.make() + 1;
        prov[i] = label;
      }
    }
  }

  // Second pass: final ids in first-encounter order of each root.
  std::vector<std::uint32_t> final_id;
  std::uint32_t next = 0;
  for (auto& v : prov) {
    if (v == 0) continue;
    const std::uint32_t root = sets.find(v - 1);
    if (root >= final_id.size()) final_id.resize(root + 1, 0);
    if (final_id[root] == 0) final_id[root] = ++next;
    v = final_id[root];
  }
  return LabelMap3D(d, mask.spacing(), std::move(prov), next);
}

std::vector<ComponentStats> component_stats(const LabelMap3D& lm) {
  const std::uint32_t k = lm.component_count();
  std::vector<ComponentStats> stats(k);
  std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
  const Dims3& d = lm.dims();
  std::size_t i = 0;
  for (std::size_t z = 0; z < d.depth; ++z)
    for (std::size_t r = 0; r < d.rows; ++r)
      for (std::size_t c = 0; c < d.cols; ++c, ++i) {
        const std::uint32_t id = lm.data()[i];
        if (id == 0) continue;
        auto& s = stats[id - 1];
        ++s.voxel_count;
        sums[id - 1][0] += double(z);
        sums[id - 1][1] += double(r);
        sums[id - 1][2] += double(c);
      }
  for (std::uint32_t j = 0; j < k; ++j) {
    auto& s = stats[j];
    s.id = j + 1;
    s.volume_ml = voxel_volume_ml(lm.spacing(), s.voxel_count);
    const double n = double(s.voxel_count);
    s.centroid = {sums[j][0] / n, sums[j][1] / n, sums[j][2] / n};
  }
  std::sort(stats.begin(), stats.end(), [](const ComponentStats& a, const ComponentStats& b) {
    if (a.voxel_count != b.voxel_count) return a.voxel_count > b.voxel_count;
    return a.id < b.id;
  });
  return stats;
}

AbnormalityVerdict classify(std::span<const ComponentStats> stats, std::size_t th_vn) {
  if (th_vn == 0) throw Error("th_vn must be positive");
  AbnormalityVerdict v;
  for (const auto& s : stats) {
    if (s.voxel_count >= th_vn) v.kidney_ids.push_back(s.id);
  }
  v.n_kidney = v.kidney_ids.size();
  v.verdict = v.n_kidney == 2 ? Verdict::normal : Verdict::abnormal;
  return v;
}

Mask3D remove_small(const LabelMap3D& lm, std::size_t th_vn) {
  if (th_vn == 0) throw Error("th_vn must be positive");
  std::vector<std::size_t> counts(lm.component_count() + 1, 0);
  for (auto id : lm.data()) ++counts[id];
  std::vector<std::uint8_t> out(lm.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto id = lm.data()[i];
    out[i] = (id != 0 && counts[id] >= th_vn) ? 1 : 0;
  }
  return Mask3D(lm.dims(), lm.spacing(), std::move(out));
}

std::optional<std::array<double, 3>> foreground_centroid(const Mask3D& mask) {
  const Dims3& d = mask.dims();
  double sz = 0, sr = 0, sc = 0;
  std::size_t n = 0, i = 0;
  for (std::size_t z = 0; z < d.depth; ++z)
    for (std::size_t r = 0; r < d.rows; ++r)
      for (std::size_t c = 0; c < d.cols; ++c, ++i) {
        if (!mask.data()[i]) continue;
        ++n;
        sz += double(z);
        sr += double(r);
        sc += double(c);
      }
  if (n == 0) return std::nullopt;
  return std::array<double, 3>{sz / double(n), sr / double(n), sc / double(n)};
}

}  // namespace c2f
