#pragma once

#include <optional>

#include "cpf/anchors.hpp"
#include "cpf/queries.hpp"

namespace cpf {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricsReport {
  double hand_mpvpe = 0;           // mm
  double object_mpvpe = 0;         // mm
  double penetration_depth = 0;    // mm
  double intersection_volume = 0;  // cm^3
  double disjointedness = 0;       // mm
  // Needs an external physics engine; reported as absent, never faked.
  std::optional<double> simulation_displacement;
};

// Mean per-vertex Euclidean error; requires identical ordering.
double mpvpe(const std::vector<Vec3>& pred_vertices,
             const std::vector<Vec3>& gt_vertices);

// Maximum nearest-surface distance over hand vertices strictly inside the
// object; 0 when nothing penetrates.
double penetration_depth(const Mesh& hand_mesh, const Mesh& object_mesh);

// Object voxelized at the given resolution; cells whose centers fall inside
// the hand are summed and converted to cm^3.
double intersection_volume(const Mesh& hand_mesh, const Mesh& object_mesh,
                           int resolution = 80);

// Mean unsigned distance of the 5 distal-phalange subregions' vertices to
// the object surface; penetrating vertices count as 0 (contact achieved).
double disjointedness(const Mesh& hand_mesh, const SubregionMap& subregions,
                      const Mesh& object_mesh);

MetricsReport evaluate_grasp(const Mesh& pred_hand, const Mesh& pred_object,
                             const Mesh& gt_hand, const Mesh& gt_object,
                             const SubregionMap& subregions,
                             int siv_resolution = 80);

}  // namespace cpf
