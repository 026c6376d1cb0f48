#pragma once

#include "cpf/hand_model.hpp"
#include "cpf/queries.hpp"

namespace cpf {

struct AnchorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 17 palm subregions: 3 phalanges per finger, palm metacarpal, carpal.
constexpr int kRegionCount = 17;
constexpr int kPalmMetacarpalRegion = 15;
constexpr int kCarpalRegion = 16;

inline int phalange_region(int finger, int phalange) {
  return 3 * finger + phalange;  // phalange 0 proximal, 1 intermediate, 2 distal
}

const std::vector<std::string>& region_names();

/// Representative skeleton point used to label hand vertices and to cast
/// anchor rays. Ids 0..23: finger f in {0..3} holds ids 5f..5f+4
/// (palm-side metacarpal third, proximal, intermediate, distal, wrist-side
/// metacarpal third); the thumb holds 20..23 (metacarpal midpoint, proximal,
/// intermediate, distal).
struct ControlPoint {
  int id;
  Vec3 position;
  int link_id;
  int region;
  bool tip;  // distal-link control point; derives 3 anchors via a cone
};

constexpr int kControlPointCount = 24;

struct SubregionMap {
  std::vector<int> region_of_vertex;  // -1 for back-of-hand vertices
  std::vector<std::string> region_names;
  std::vector<int> tip_regions;  // the 5 distal-phalange region ids

  std::vector<int> histogram() const;  // vertex count per region
};

/// Precomputed (face, barycentric weights) records; anchor position is
/// (1-x1-x2) v1 + x1 v2 + x2 v3 of the face's vertices, so anchors follow
/// the posed surface differentiably.
struct AnchorRecord {
  int face;
  double x1, x2;
  int region;
};

struct AnchorSet {
  std::vector<AnchorRecord> anchors;

  std::vector<int> anchors_in_region(int region) const;
  std::vector<int> tip_anchor_indices(const SubregionMap& map) const;
};

// 24 control points from the canonical tree (requires fingertip records).
std::vector<ControlPoint> build_control_points(const SkinnedHand& hand);

// Labels every palm-side vertex (canonical y < 0) by its nearest control
// point, then merges points {0,5,10,15,20} into Palm Metacarpal and
// {4,9,14,19} into Carpal. Ties go to the lower control-point id.
SubregionMap assign_subregions(const SkinnedHand& hand,
                               const std::vector<ControlPoint>& cps);

// Ray-casts from control points toward the palm (-y). Distal control points
// produce three anchors along cone generatrices; the Carpal region reuses
// control points {5, 10, 20}. Control points {4, 9, 14, 19} yield none.
AnchorSet derive_anchors(const SkinnedHand& hand,
                         const std::vector<ControlPoint>& cps,
                         const SubregionMap& subregions);

// a = (1 - x1 - x2) v1 + x1 v2 + x2 v3 per anchor.
std::vector<Vec3> interpolate_anchors(const AnchorSet& set, const Mesh& topology,
                                      const std::vector<Vec3>& posed_vertices);

}  // namespace cpf
