#include "cpf/anchors.hpp"

#include <algorithm>
#include <cmath>

namespace cpf {

namespace {
const char* kFingerNames[kFingerCount] = {"index", "middle", "ring", "pinky",
                                          "thumb"};
const char* kPhalangeNames[3] = {"proximal", "intermediate", "distal"};

constexpr int kPalmMergedCps[] = {0, 5, 10, 15, 20};
constexpr int kCarpalMergedCps[] = {4, 9, 14, 19};
constexpr int kCarpalAnchorCps[] = {5, 10, 20};

bool contains(const int* begin, const int* end, int value) {
  return std::find(begin, end, value) != end;
}
}  // namespace

const std::vector<std::string>& region_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (int f = 0; f < kFingerCount; ++f) {
      for (int p = 0; p < 3; ++p) {
        out.push_back(std::string(kFingerNames[f]) + "_" + kPhalangeNames[p]);
      }
    }
    out.emplace_back("palm_metacarpal");
    out.emplace_back("carpal");
    return out;
  }();
  return names;
}

std::vector<int> SubregionMap::histogram() const {
  std::vector<int> counts(kRegionCount, 0);
  for (int r : region_of_vertex) {
    if (r >= 0) ++counts[r];
  }
  return counts;
}

std::vector<int> AnchorSet::anchors_in_region(int region) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (anchors[i].region == region) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> AnchorSet::tip_anchor_indices(const SubregionMap& map) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (std::find(map.tip_regions.begin(), map.tip_regions.end(),
                  anchors[i].region) != map.tip_regions.end()) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

std::vector<ControlPoint> build_control_points(const SkinnedHand& hand) {
  const KinematicTree& tree = hand.tree;
  tree.validate();
  const Vec3 wrist = tree.rest_positions[0];
  std::vector<ControlPoint> cps(kControlPointCount);

  auto set = [&](int id, const Vec3& pos, int link, int region, bool tip) {
    cps[id] = ControlPoint{id, pos, link, region, tip};
  };

  for (int f = 0; f < kFingerCount; ++f) {
    const int base = 1 + 3 * f;
    const Vec3 mcp = tree.rest_positions[base];
    const Vec3 pip = tree.rest_positions[base + 1];
    const Vec3 dip = tree.rest_positions[base + 2];
    auto tip_it = tree.tip_positions.find(base + 2);
    if (tip_it == tree.tip_positions.end()) {
      throw AnchorError("missing fingertip record for joint " +
                        std::to_string(base + 2));
    }
    const Vec3 tip = tip_it->second;
    const int link0 = 4 * f;  // metacarpal, proximal, intermediate, distal
    if (f < 4) {
      // Metacarpal carries two control points at its thirds: the
      // knuckle-side one labels the palm, the wrist-side one the carpals.
      set(5 * f + 0, wrist + 2.0 / 3.0 * (mcp - wrist), link0,
          kPalmMetacarpalRegion, false);
      set(5 * f + 4, wrist + 1.0 / 3.0 * (mcp - wrist), link0, kCarpalRegion,
          false);
      set(5 * f + 1, 0.5 * (mcp + pip), link0 + 1, phalange_region(f, 0),
          false);
      set(5 * f + 2, 0.5 * (pip + dip), link0 + 2, phalange_region(f, 1),
          false);
      set(5 * f + 3, 0.5 * (dip + tip), link0 + 3, phalange_region(f, 2),
          true);
    } else {
      set(20, 0.5 * (wrist + mcp), link0, kPalmMetacarpalRegion, false);
      set(21, 0.5 * (mcp + pip), link0 + 1, phalange_region(f, 0), false);
      set(22, 0.5 * (pip + dip), link0 + 2, phalange_region(f, 1), false);
      set(23, 0.5 * (dip + tip), link0 + 3, phalange_region(f, 2), true);
    }
  }
  return cps;
}

SubregionMap assign_subregions(const SkinnedHand& hand,
                               const std::vector<ControlPoint>& cps) {
  SubregionMap map;
  map.region_names = region_names();
  for (int f = 0; f < kFingerCount; ++f) {
    map.tip_regions.push_back(phalange_region(f, 2));
  }
  map.region_of_vertex.assign(hand.template_mesh.vertices.size(), -1);
  for (std::size_t i = 0; i < hand.template_mesh.vertices.size(); ++i) {
    const Vec3& v = hand.template_mesh.vertices[i];
    if (v.y() >= 0.0) continue;  // back of the hand
    int best = -1;
    double best_d = 0;
    for (const auto& cp : cps) {
      const double d = (v - cp.position).norm();
      if (best < 0 || d < best_d) {
        best = cp.id;
        best_d = d;
      }
    }
    int region = cps[best].region;
    if (contains(std::begin(kPalmMergedCps), std::end(kPalmMergedCps), best)) {
      region = kPalmMetacarpalRegion;
    } else if (contains(std::begin(kCarpalMergedCps),
                        std::end(kCarpalMergedCps), best)) {
      region = kCarpalRegion;
    }
    map.region_of_vertex[i] = region;
  }
  return map;
}

namespace {
AnchorRecord cast_anchor(const MeshIndex& index, const ControlPoint& cp,
                         const Vec3& dir, int region) {
  auto hit = index.ray_cast(cp.position, dir);
  if (!hit) {
    throw AnchorError("anchor ray from control point " +
                      std::to_string(cp.id) + " missed the hand surface");
  }
  return AnchorRecord{hit->face_index, hit->u, hit->v, region};
}
}  // namespace

AnchorSet derive_anchors(const SkinnedHand& hand,
                         const std::vector<ControlPoint>& cps,
                         const SubregionMap& subregions) {
  const MeshIndex index(hand.template_mesh);
  const Vec3 down(0, -1, 0);  // toward the palm in the canonical frame
  AnchorSet set;

  for (const auto& cp : cps) {
    if (contains(std::begin(kCarpalMergedCps), std::end(kCarpalMergedCps),
                 cp.id)) {
      continue;
    }
    if (!cp.tip) {
      set.anchors.push_back(cast_anchor(index, cp, down, cp.region));
      continue;
    }
    // Cone: apex at the control point, base centered at the first palm-side
    // hit, radius from the farthest region vertex. Three generatrices at
    // 120 degrees; the first lies in the plane of the axis and canonical +x.
    auto hit = index.ray_cast(cp.position, down);
    if (!hit) {
      throw AnchorError("anchor ray from control point " +
                        std::to_string(cp.id) + " missed the hand surface");
    }
    const Vec3 axis = (hit->point - cp.position).normalized();
    double radius = 0;
    for (std::size_t i = 0; i < subregions.region_of_vertex.size(); ++i) {
      if (subregions.region_of_vertex[i] == cp.region) {
        radius = std::max(
            radius, (hand.template_mesh.vertices[i] - cp.position).norm());
      }
    }
    if (radius <= 0) radius = (hit->point - cp.position).norm();
    const Vec3 x_axis(1, 0, 0);
    Vec3 u = x_axis - x_axis.dot(axis) * axis;
    if (u.norm() < 1e-9) u = Vec3(0, 0, 1) - axis.z() * axis;
    u.normalize();
    const Vec3 v = axis.cross(u);
    const double h = (hit->point - cp.position).norm();
    for (int g = 0; g < 3; ++g) {
      const double ang = 2.0 * M_PI * g / 3.0;
      const Vec3 rim = cp.position + h * axis +
                       radius * (std::cos(ang) * u + std::sin(ang) * v);
      const Vec3 dir = (rim - cp.position).normalized();
      set.anchors.push_back(cast_anchor(index, cp, dir, cp.region));
    }
  }
  for (int id : kCarpalAnchorCps) {
    set.anchors.push_back(cast_anchor(index, cps[id], down, kCarpalRegion));
  }
  return set;
}

std::vector<Vec3> interpolate_anchors(const AnchorSet& set,
                                      const Mesh& topology,
                                      const std::vector<Vec3>& posed_vertices) {
  if (posed_vertices.size() != topology.vertices.size()) {
    throw AnchorError("posed vertex count does not match the hand topology");
  }
  std::vector<Vec3> out;
  out.reserve(set.anchors.size());
  for (const auto& a : set.anchors) {
    if (a.face < 0 || a.face >= static_cast<int>(topology.faces.size())) {
      throw AnchorError("anchor face index out of range");
    }
    const auto& f = topology.faces[a.face];
    out.push_back((1.0 - a.x1 - a.x2) * posed_vertices[f[0]] +
                  a.x1 * posed_vertices[f[1]] + a.x2 * posed_vertices[f[2]]);
  }
  return out;
}

}  // namespace cpf
