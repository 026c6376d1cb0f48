#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cpf/metrics.hpp"
#include "cpf/scene.hpp"

using namespace cpf;

namespace {

// Axis-aligned box [lo, hi] as 12 triangles with outward winding.
Mesh box_mesh(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(),
                            i & 4 ? hi.z() : lo.z());
  }
  m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6},
             {0, 1, 5}, {0, 5, 4}, {2, 6, 7}, {2, 7, 3},
             {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return m;
}

}  // namespace

TEST_CASE("mpvpe basics") {
  const std::vector<Vec3> a = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  CHECK(mpvpe(a, a) == 0.0);
  const std::vector<Vec3> b = {Vec3(3, 4, 0), Vec3(1, 1, 2)};
  CHECK(mpvpe(b, a) == doctest::Approx(0.5 * (5.0 + 1.0)));
  CHECK_THROWS_AS(mpvpe(a, {Vec3(0, 0, 0)}), MetricError);
}

TEST_CASE("rigid wrist shift moves mpvpe by the shift length") {
  const GraspScene s = make_sphere_grasp_scene(3, 15.0, 0.0);
  const Mesh init = pose_hand(s.hand, s.initial_pose);
  CHECK(mpvpe(init.vertices, s.gt_hand.vertices) == doctest::Approx(15.0));
}

TEST_CASE("penetration depth of separated and touching meshes is zero") {
  const Mesh object = make_icosphere(10.0, 3);
  const Mesh far_hand = make_icosphere(5.0, 2, Vec3(30, 0, 0));
  CHECK(penetration_depth(far_hand, object) == 0.0);
  CHECK(intersection_volume(far_hand, object) == 0.0);
}

TEST_CASE("penetration depth matches a constructed overlap") {
  // Small sphere whose deepest vertices reach delta inside the big one.
  const double R = 20.0, r = 5.0;
  const Mesh object = make_icosphere(R, 4);
  for (double delta : {1.0, 3.0}) {
    const Mesh hand = make_icosphere(r, 3, Vec3(R + r - delta, 0, 0));
    // Deepest inside vertex depth (to the true sphere surface): R - min|v|.
    double expected = 0;
    for (const auto& v : hand.vertices) {
      expected = std::max(expected, R - v.norm());
    }
    CHECK(penetration_depth(hand, object) ==
          doctest::Approx(expected).epsilon(0.02));
  }
}

TEST_CASE("penetration depth demands a watertight object") {
  Mesh object = make_icosphere(10.0, 2);
  object.faces.pop_back();
  const Mesh hand = make_icosphere(5.0, 2);
  CHECK_THROWS_AS(penetration_depth(hand, object), MetricError);
}

TEST_CASE("intersection volume reproduces analytic box overlaps") {
  const Mesh hand = box_mesh(Vec3(0, 0, 0), Vec3(20, 20, 20));
  for (double f : {0.25, 0.5, 0.75}) {
    // Object slides along x: overlap fraction f of its 20^3 mm^3 volume.
    const double shift = 20.0 * (1.0 - f);
    const Mesh object =
        box_mesh(Vec3(shift, 0, 0), Vec3(shift + 20.0, 0 + 20.0, 20.0));
    const double analytic_cm3 = f * 20.0 * 20.0 * 20.0 * 1e-3;
    CHECK(intersection_volume(hand, object, 80) ==
          doctest::Approx(analytic_cm3).epsilon(0.05));
  }
}

TEST_CASE("disjointedness: distance of fingertip vertices to the surface") {
  // Two-vertex "tip" setup via a handcrafted subregion map over a tiny mesh.
  Mesh hand;
  hand.vertices = {Vec3(0, 0, 15), Vec3(0, 0, 13), Vec3(0, 0, 50)};
  hand.faces = {{0, 1, 2}};
  SubregionMap map;
  map.region_names.assign(kRegionCount, "");
  for (int f = 0; f < kFingerCount; ++f) {
    map.tip_regions.push_back(phalange_region(f, 2));
  }
  map.region_of_vertex = {phalange_region(0, 2), phalange_region(1, 2), -1};
  const Mesh object = make_icosphere(10.0, 4);
  // Tip vertices sit 5 and 3 mm off the sphere; vertex 2 is not a tip.
  CHECK(disjointedness(hand, map, object) ==
        doctest::Approx(0.5 * (5.0 + 3.0)).epsilon(0.01));
  // A penetrating tip counts as zero distance.
  hand.vertices[0] = Vec3(0, 0, 8);
  CHECK(disjointedness(hand, map, object) ==
        doctest::Approx(0.5 * (0.0 + 3.0)).epsilon(0.02));
  // No tip-labeled vertices at all is an error.
  map.region_of_vertex = {-1, -1, -1};
  CHECK_THROWS_AS(disjointedness(hand, map, object), MetricError);
}

TEST_CASE("perfect prediction yields a clean report") {
  const GraspScene s = make_sphere_grasp_scene(5);
  const MetricsReport report =
      evaluate_grasp(s.gt_hand, s.object, s.gt_hand, s.object, s.subregions,
                     40);
  CHECK(report.hand_mpvpe == 0.0);
  CHECK(report.object_mpvpe == 0.0);
  // The ground-truth grasp hovers 1 mm off the ball by construction.
  CHECK(report.penetration_depth == 0.0);
  CHECK(report.intersection_volume == 0.0);
  CHECK(report.disjointedness > 0.0);
  CHECK(report.disjointedness < 10.0);
  CHECK_FALSE(report.simulation_displacement.has_value());
}

TEST_CASE("a perturbed hand scores worse than the ground truth") {
  const GraspScene s = make_sphere_grasp_scene(6, 15.0, 10.0);
  const Mesh init = pose_hand(s.hand, s.initial_pose);
  const MetricsReport report =
      evaluate_grasp(init, s.object, s.gt_hand, s.object, s.subregions, 40);
  CHECK(report.hand_mpvpe == doctest::Approx(15.0).epsilon(0.35));
  CHECK(report.object_mpvpe == 0.0);
  // 15 mm of wrist displacement either penetrates or separates.
  CHECK((report.penetration_depth > 0.0 || report.disjointedness > 1.0));
}
