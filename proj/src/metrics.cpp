#include "cpf/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cpf {

double mpvpe(const std::vector<Vec3>& pred_vertices,
             const std::vector<Vec3>& gt_vertices) {
  if (pred_vertices.size() != gt_vertices.size()) {
    throw MetricError("vertex count mismatch in mpvpe");
  }
  if (pred_vertices.empty()) throw MetricError("mpvpe of empty vertex set");
  double sum = 0;
  for (std::size_t i = 0; i < pred_vertices.size(); ++i) {
    sum += (pred_vertices[i] - gt_vertices[i]).norm();
  }
  return sum / static_cast<double>(pred_vertices.size());
}

double penetration_depth(const Mesh& hand_mesh, const Mesh& object_mesh) {
  if (!is_watertight(object_mesh)) {
    throw MetricError("penetration depth requires a watertight object");
  }
  const MeshIndex object(object_mesh);
  double depth = 0;
  for (const auto& v : hand_mesh.vertices) {
    if (object.is_inside(v)) {
      depth = std::max(depth, object.nearest_surface_point(v).distance);
    }
  }
  return depth;
}

double intersection_volume(const Mesh& hand_mesh, const Mesh& object_mesh,
                           int resolution) {
  if (!is_watertight(hand_mesh) || !is_watertight(object_mesh)) {
    throw MetricError("intersection volume requires watertight meshes");
  }
  const VoxelGrid grid = voxelize(object_mesh, resolution);
  const MeshIndex hand(hand_mesh);
  double volume_mm3 = 0;
  std::size_t at = 0;
  for (int x = 0; x < grid.nx; ++x) {
    for (int y = 0; y < grid.ny; ++y) {
      for (int z = 0; z < grid.nz; ++z, ++at) {
        if (grid.occupancy[at] && hand.is_inside(grid.cell_center(x, y, z))) {
          volume_mm3 += grid.cell_volume_mm3();
        }
      }
    }
  }
  return volume_mm3 * 1e-3;  // mm^3 -> cm^3
}

double disjointedness(const Mesh& hand_mesh, const SubregionMap& subregions,
                      const Mesh& object_mesh) {
  if (subregions.region_of_vertex.size() != hand_mesh.vertices.size()) {
    throw MetricError("subregion map does not match the hand mesh");
  }
  const bool object_closed = is_watertight(object_mesh);
  const MeshIndex object(object_mesh);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < hand_mesh.vertices.size(); ++i) {
    const int region = subregions.region_of_vertex[i];
    if (std::find(subregions.tip_regions.begin(), subregions.tip_regions.end(),
                  region) == subregions.tip_regions.end()) {
      continue;
    }
    const Vec3& v = hand_mesh.vertices[i];
    double d = object.nearest_surface_point(v).distance;
    if (object_closed && object.is_inside(v)) d = 0.0;
    sum += d;
    ++count;
  }
  if (count == 0) throw MetricError("no fingertip vertices in the subregion map");
  return sum / static_cast<double>(count);
}

MetricsReport evaluate_grasp(const Mesh& pred_hand, const Mesh& pred_object,
                             const Mesh& gt_hand, const Mesh& gt_object,
                             const SubregionMap& subregions,
                             int siv_resolution) {
  MetricsReport report;
  report.hand_mpvpe = mpvpe(pred_hand.vertices, gt_hand.vertices);
  report.object_mpvpe = mpvpe(pred_object.vertices, gt_object.vertices);
  report.penetration_depth = penetration_depth(pred_hand, pred_object);
  report.intersection_volume =
      intersection_volume(pred_hand, pred_object, siv_resolution);
  report.disjointedness = disjointedness(pred_hand, subregions, pred_object);
  return report;
}

}  // namespace cpf
