#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cpf/mesh.hpp"

namespace cpf {

struct SurfaceHit {
  Vec3 point;
  double distance;  // mm
  int face_index;
};

struct RayHit {
  Vec3 point;
  double t;  // ray parameter
  int face_index;
  double u = 0, v = 0;  // barycentrics of corners 1 and 2
};

// Closest point on triangle (a, b, c) to p (Ericson's region walk).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

// Moller-Trumbore. Returns the positive ray parameter, barycentrics u, v.
bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                  const Vec3& b, const Vec3& c, double& t, double& u,
                  double& v);

/// Immutable axis-aligned BVH over a mesh's triangles. Queries fall back to
/// a brute-force scan below 256 faces; both paths use the same per-triangle
/// arithmetic and the same lowest-face-index tie-break.
class MeshIndex {
 public:
  explicit MeshIndex(const Mesh& mesh);

  const Mesh& mesh() const { return mesh_; }

  SurfaceHit nearest_surface_point(const Vec3& p) const;
  std::optional<RayHit> ray_cast(const Vec3& origin, const Vec3& dir) const;

  // Counts crossings along the ray; reports whether any hit was degenerate
  // (barycentric coordinate within 1e-12 of an edge).
  int count_crossings(const Vec3& origin, const Vec3& dir,
                      bool& degenerate) const;

  bool is_inside(const Vec3& p) const;

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;   // children, -1 for leaf
    int begin = 0, end = 0;      // face range for leaves
  };

  int build(int begin, int end);
  void nearest_in_node(int node, const Vec3& p, SurfaceHit& best) const;

  Mesh mesh_;
  std::vector<int> face_order_;  // faces sorted during build
  std::vector<Node> nodes_;
  int root_ = -1;
  bool use_bvh_ = false;
};

SurfaceHit nearest_surface_point(const Vec3& p, const Mesh& m);
std::optional<RayHit> ray_cast(const Vec3& origin, const Vec3& dir,
                               const Mesh& m);

// Ray-parity inside test; requires a watertight mesh. A degenerate hit
// triggers one retry along a pseudo-random direction seeded from the
// point's bit pattern, so results are deterministic.
bool is_inside(const Vec3& p, const Mesh& m);

struct VoxelGrid {
  Vec3 origin = Vec3::Zero();      // mm
  Vec3 cell_size = Vec3::Ones();   // mm per axis
  int nx = 0, ny = 0, nz = 0;
  std::vector<bool> occupancy;  // x-major: ((x * ny) + y) * nz + z

  bool occupied(int x, int y, int z) const {
    return occupancy[(static_cast<std::size_t>(x) * ny + y) * nz + z];
  }
  Vec3 cell_center(int x, int y, int z) const {
    return origin + cell_size.cwiseProduct(Vec3(x + 0.5, y + 0.5, z + 0.5));
  }
  double cell_volume_mm3() const {
    return cell_size.x() * cell_size.y() * cell_size.z();
  }
  std::size_t occupied_count() const;
  double occupied_volume_mm3() const;
};

// Grid of resolution^3 cells spanning the mesh's bounding box; a cell is
// occupied iff its center is inside the mesh.
VoxelGrid voxelize(const Mesh& m, int resolution);

}  // namespace cpf
