#include "cpf/queries.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace cpf {

namespace {
constexpr int kBvhThreshold = 256;
constexpr int kLeafSize = 8;
constexpr double kDegenerateEps = 1e-12;
}  // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + v * ab + w * ac;
}

bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                  const Vec3& b, const Vec3& c, double& t, double& u,
                  double& v) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - a;
  u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qvec = tvec.cross(e1);
  v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  t = e2.dot(qvec) * inv_det;
  return t > 0.0;
}

// ---------------------------------------------------------------------------
// MeshIndex

MeshIndex::MeshIndex(const Mesh& mesh) : mesh_(mesh) {
  if (mesh_.faces.empty()) throw MeshError("mesh index over empty mesh");
  validate_mesh(mesh_);
  face_order_.resize(mesh_.faces.size());
  std::iota(face_order_.begin(), face_order_.end(), 0);
  use_bvh_ = static_cast<int>(mesh_.faces.size()) > kBvhThreshold;
  if (use_bvh_) {
    nodes_.reserve(2 * mesh_.faces.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(face_order_.size()));
  }
}

int MeshIndex::build(int begin, int end) {
  Node node;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    const auto& f = mesh_.faces[face_order_[i]];
    for (int c = 0; c < 3; ++c) {
      node.lo = node.lo.cwiseMin(mesh_.vertices[f[c]]);
      node.hi = node.hi.cwiseMax(mesh_.vertices[f[c]]);
    }
  }
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) {
    nodes_[index].begin = begin;
    nodes_[index].end = end;
    return index;
  }
  const Vec3 extent = node.hi - node.lo;
  int axis = 0;
  if (extent.y() > extent.x()) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const int mid = (begin + end) / 2;
  std::nth_element(face_order_.begin() + begin, face_order_.begin() + mid,
                   face_order_.begin() + end, [&](int fa, int fb) {
                     auto centroid = [&](int f) {
                       const auto& face = mesh_.faces[f];
                       return (mesh_.vertices[face[0]][axis] +
                               mesh_.vertices[face[1]][axis] +
                               mesh_.vertices[face[2]][axis]);
                     };
                     const double ca = centroid(fa);
                     const double cb = centroid(fb);
                     if (ca != cb) return ca < cb;
                     return fa < fb;
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

namespace {
double box_distance_sq(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  double d2 = 0;
  for (int i = 0; i < 3; ++i) {
    const double d = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
    d2 += d * d;
  }
  return d2;
}

void consider_face(const Mesh& mesh, int f, const Vec3& p, SurfaceHit& best) {
  const Vec3 q = closest_point_on_triangle(p, mesh.face_vertex(f, 0),
                                           mesh.face_vertex(f, 1),
                                           mesh.face_vertex(f, 2));
  const double d = (p - q).norm();
  if (d < best.distance ||
      (d == best.distance && f < best.face_index)) {
    best = {q, d, f};
  }
}

bool ray_box(const Vec3& origin, const Vec3& inv_dir, const Vec3& lo,
             const Vec3& hi) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(inv_dir[i])) {
      // Axis-parallel ray: 0 * inf would poison the slab test with NaNs.
      if (origin[i] < lo[i] || origin[i] > hi[i]) return false;
      continue;
    }
    const double t1 = (lo[i] - origin[i]) * inv_dir[i];
    const double t2 = (hi[i] - origin[i]) * inv_dir[i];
    tmin = std::max(tmin, std::min(t1, t2));
    tmax = std::min(tmax, std::max(t1, t2));
  }
  return tmin <= tmax;
}
}  // namespace

void MeshIndex::nearest_in_node(int node_idx, const Vec3& p,
                                SurfaceHit& best) const {
  const Node& node = nodes_[node_idx];
  // Prune only when strictly farther so equal-distance faces keep the
  // lowest-index tie-break.
  if (box_distance_sq(p, node.lo, node.hi) > best.distance * best.distance) {
    return;
  }
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      consider_face(mesh_, face_order_[i], p, best);
    }
    return;
  }
  const double dl = box_distance_sq(p, nodes_[node.left].lo, nodes_[node.left].hi);
  const double dr =
      box_distance_sq(p, nodes_[node.right].lo, nodes_[node.right].hi);
  if (dl <= dr) {
    nearest_in_node(node.left, p, best);
    nearest_in_node(node.right, p, best);
  } else {
    nearest_in_node(node.right, p, best);
    nearest_in_node(node.left, p, best);
  }
}

SurfaceHit MeshIndex::nearest_surface_point(const Vec3& p) const {
  SurfaceHit best{Vec3::Zero(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<int>::max()};
  if (use_bvh_) {
    nearest_in_node(root_, p, best);
  } else {
    for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) {
      consider_face(mesh_, f, p, best);
    }
  }
  return best;
}

std::optional<RayHit> MeshIndex::ray_cast(const Vec3& origin,
                                          const Vec3& dir) const {
  if (dir.squaredNorm() == 0.0) throw MeshError("ray direction is zero");
  std::optional<RayHit> best;
  auto try_face = [&](int f) {
    double t, u, v;
    if (ray_triangle(origin, dir, mesh_.face_vertex(f, 0),
                     mesh_.face_vertex(f, 1), mesh_.face_vertex(f, 2), t, u,
                     v)) {
      if (!best || t < best->t || (t == best->t && f < best->face_index)) {
        best = RayHit{origin + t * dir, t, f, u, v};
      }
    }
  };
  if (!use_bvh_) {
    for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) try_face(f);
    return best;
  }
  const Vec3 inv_dir = dir.cwiseInverse();
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const Node& node = nodes_[idx];
    if (!ray_box(origin, inv_dir, node.lo, node.hi)) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) try_face(face_order_[i]);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return best;
}

int MeshIndex::count_crossings(const Vec3& origin, const Vec3& dir,
                               bool& degenerate) const {
  degenerate = false;
  int crossings = 0;
  auto try_face = [&](int f) {
    double t, u, v;
    if (ray_triangle(origin, dir, mesh_.face_vertex(f, 0),
                     mesh_.face_vertex(f, 1), mesh_.face_vertex(f, 2), t, u,
                     v)) {
      const double w = 1.0 - u - v;
      if (u < kDegenerateEps || v < kDegenerateEps || w < kDegenerateEps) {
        degenerate = true;
      }
      ++crossings;
    }
  };
  if (!use_bvh_) {
    for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) try_face(f);
    return crossings;
  }
  const Vec3 inv_dir = dir.cwiseInverse();
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const Node& node = nodes_[idx];
    if (!ray_box(origin, inv_dir, node.lo, node.hi)) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) try_face(face_order_[i]);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return crossings;
}

namespace {
// Deterministic unit direction from the point's bit pattern (splitmix64).
Vec3 jitter_direction(const Vec3& p, std::uint64_t salt) {
  std::uint64_t h = salt;
  for (int i = 0; i < 3; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &p[i], sizeof(bits));
    h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  auto next = [&h]() {
    h += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  auto uniform = [&]() {
    return static_cast<double>(next() >> 11) / 9007199254740992.0;
  };
  // Marsaglia sphere sampling
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double x = 2.0 * uniform() - 1.0;
    const double y = 2.0 * uniform() - 1.0;
    const double s = x * x + y * y;
    if (s > 0.0 && s < 1.0) {
      const double r = 2.0 * std::sqrt(1.0 - s);
      return Vec3(x * r, y * r, 1.0 - 2.0 * s);
    }
  }
  return Vec3(0, 0, 1);
}
}  // namespace

bool MeshIndex::is_inside(const Vec3& p) const {
  bool degenerate = false;
  int crossings = count_crossings(p, Vec3(1, 0, 0), degenerate);
  std::uint64_t salt = 0;
  while (degenerate && salt < 16) {
    crossings = count_crossings(p, jitter_direction(p, ++salt), degenerate);
  }
  return (crossings % 2) == 1;
}

SurfaceHit nearest_surface_point(const Vec3& p, const Mesh& m) {
  return MeshIndex(m).nearest_surface_point(p);
}

std::optional<RayHit> ray_cast(const Vec3& origin, const Vec3& dir,
                               const Mesh& m) {
  return MeshIndex(m).ray_cast(origin, dir);
}

bool is_inside(const Vec3& p, const Mesh& m) {
  if (!is_watertight(m)) throw MeshError("inside test requires a watertight mesh");
  return MeshIndex(m).is_inside(p);
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(
      std::count(occupancy.begin(), occupancy.end(), true));
}

double VoxelGrid::occupied_volume_mm3() const {
  return static_cast<double>(occupied_count()) * cell_volume_mm3();
}

VoxelGrid voxelize(const Mesh& m, int resolution) {
  if (resolution < 1) throw MeshError("voxel resolution must be >= 1");
  if (!is_watertight(m)) {
    throw MeshError("voxelize requires a watertight mesh");
  }
  VoxelGrid grid;
  Vec3 lo, hi;
  bounding_box(m, lo, hi);
  grid.origin = lo;
  grid.nx = grid.ny = grid.nz = resolution;
  grid.cell_size = (hi - lo) / resolution;
  for (int i = 0; i < 3; ++i) {
    grid.cell_size[i] = std::max(grid.cell_size[i], 1e-12);
  }
  grid.occupancy.assign(
      static_cast<std::size_t>(resolution) * resolution * resolution, false);
  const MeshIndex index(m);
  std::size_t at = 0;
  for (int x = 0; x < grid.nx; ++x) {
    for (int y = 0; y < grid.ny; ++y) {
      for (int z = 0; z < grid.nz; ++z, ++at) {
        grid.occupancy[at] = index.is_inside(grid.cell_center(x, y, z));
      }
    }
  }
  return grid;
}

}  // namespace cpf
