#include "cpf/scene.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <random>

namespace cpf {
namespace {

int midpoint(std::map<std::pair<int, int>, int>& cache, Mesh& mesh, int a,
             int b) {
  const auto key = std::minmax(a, b);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const int id = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
  cache.emplace(key, id);
  return id;
}

Vec3 seeded_unit_vector(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  // Rejection-sample the ball; deterministic for a given engine state.
  for (;;) {
    const Vec3 v(uni(rng), uni(rng), uni(rng));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

}  // namespace

Mesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  if (radius <= 0) throw MeshError("icosphere radius must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh mesh;
  mesh.vertices = {
      {-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1},
  };
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> cache;
    std::vector<std::array<int, 3>> faces;
    faces.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const int ab = midpoint(cache, mesh, f[0], f[1]);
      const int bc = midpoint(cache, mesh, f[1], f[2]);
      const int ca = midpoint(cache, mesh, f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(faces);
  }
  for (auto& v : mesh.vertices) v = center + radius * v.normalized();
  compute_vertex_normals(mesh);
  return mesh;
}

HandPose perturb_wrist(const HandPose& pose, const KinematicTree& tree,
                       std::uint64_t seed, double translation_mm,
                       double rotation_deg) {
  std::mt19937_64 rng(seed);
  const Vec3 rot_axis = seeded_unit_vector(rng);
  const Vec3 shift = translation_mm * seeded_unit_vector(rng);
  const double angle = rotation_deg * M_PI / 180.0;

  const Mat3 r_old = rotation_to_matrix(pose.wrist.rotation);
  const Mat3 r_delta = rotation_to_matrix(Rotation{angle * rot_axis});
  // Rotate about the posed wrist joint, not the origin.
  const Vec3 wrist_world =
      r_old * tree.rest_positions[0] + pose.wrist.translation;
  HandPose out = pose;
  out.wrist.rotation = matrix_to_rotation(r_delta * r_old);
  out.wrist.translation =
      r_delta * (pose.wrist.translation - wrist_world) + wrist_world + shift;
  return out;
}

GraspScene make_sphere_grasp_scene(std::uint64_t seed, double translation_mm,
                                   double rotation_deg, double radius_margin) {
  GraspScene scene;
  scene.hand = synth_hand();
  scene.control_points = build_control_points(scene.hand);
  scene.subregions = assign_subregions(scene.hand, scene.control_points);
  scene.anchors =
      derive_anchors(scene.hand, scene.control_points, scene.subregions);

  // Palm resting on a large ball with all five fingers draped over it. The
  // ball is tangent to the flat palm under the palm/carpal anchor centroid,
  // so the spread palm springs balance at the true pose, the palm patch pins
  // the wrist directly, and the gentle curvature keeps the normal-projected
  // repulsion offsets small. Each finger's curl is solved by bisection so
  // its fingertip just reaches the ball.
  const double kBallRadius = 110.0;
  Vec3 palm_centroid = Vec3::Zero();
  {
    const std::vector<Vec3> rest_anchors = interpolate_anchors(
        scene.anchors, scene.hand.template_mesh,
        scene.hand.template_mesh.vertices);
    int n = 0;
    for (std::size_t i = 0; i < scene.anchors.anchors.size(); ++i) {
      const int region = scene.anchors.anchors[i].region;
      if (region == kPalmMetacarpalRegion || region == kCarpalRegion) {
        palm_centroid += rest_anchors[i];
        ++n;
      }
    }
    palm_centroid /= n;
  }
  const Vec3 center(palm_centroid.x(), palm_centroid.y() - kBallRadius,
                    palm_centroid.z());
  const std::vector<TsbFrame> frames = derive_tsb_frames(scene.hand.tree);
  std::vector<double> scales(kFingerCount, 0.0);
  const double ratio[3] = {1.2, 0.6, 0.3};
  auto posed_with = [&](const std::vector<double>& s) {
    HandPose pose = HandPose::zero();
    for (int f = 0; f < kFingerCount; ++f) {
      for (int p = 0; p < 3; ++p) {
        const int joint = 1 + 3 * f + p;
        pose.joint_rotations[joint - 1].axis_angle =
            -s[f] * ratio[p] * frames[joint].bend;
      }
    }
    return pose;
  };
  for (int f = 0; f < kFingerCount; ++f) {
    auto reach = [&](double s) {
      std::vector<double> trial = scales;
      trial[f] = s;
      const Mesh posed = pose_hand(scene.hand, posed_with(trial));
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < posed.vertices.size(); ++i) {
        if (scene.subregions.region_of_vertex[i] == phalange_region(f, 2)) {
          best = std::min(best, (posed.vertices[i] - center).norm());
        }
      }
      return best;
    };
    double lo = 0.0, hi = 1.5;
    for (int it = 0; it < 48; ++it) {
      const double mid = 0.5 * (lo + hi);
      (reach(mid) > kBallRadius + 1.0 ? lo : hi) = mid;
    }
    scales[f] = 0.5 * (lo + hi);
  }
  scene.gt_pose = posed_with(scales);
  scene.gt_hand = pose_hand(scene.hand, scene.gt_pose);

  double min_dist = std::numeric_limits<double>::infinity();
  for (const auto& v : scene.gt_hand.vertices) {
    min_dist = std::min(min_dist, (v - center).norm());
  }
  const double radius = std::max(5.0, min_dist + radius_margin);
  scene.object = make_icosphere(radius, 4, center);

  scene.annotation = annotate(scene.gt_hand.vertices, scene.object.vertices,
                              scene.hand.template_mesh, scene.anchors);
  scene.labels = annotation_to_labels(scene.annotation);

  scene.initial_pose = perturb_wrist(scene.gt_pose, scene.hand.tree, seed,
                                     translation_mm, rotation_deg);
  return scene;
}

GuardScene make_guard_scene() {
  GuardScene scene;
  scene.hand = synth_hand();
  scene.control_points = build_control_points(scene.hand);
  scene.subregions = assign_subregions(scene.hand, scene.control_points);
  scene.anchors =
      derive_anchors(scene.hand, scene.control_points, scene.subregions);
  scene.initial_pose = HandPose::zero();

  // Target behind the index knuckle (only reachable by over-flexing) and a
  // far-lateral target for the middle finger (demands twist/splay).
  const std::vector<Vec3> targets = {
      Vec3(40.0, -55.0, 24.0),
      Vec3(130.0, -15.0, 70.0),
  };
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int base = static_cast<int>(scene.object.vertices.size());
    scene.object.vertices.push_back(targets[i]);
    scene.object.vertices.push_back(targets[i] + Vec3(0.1, 0, 0));
    scene.object.vertices.push_back(targets[i] + Vec3(0, 0.1, 0));
    scene.object.faces.push_back({base, base + 1, base + 2});
  }
  compute_vertex_normals(scene.object);

  const std::vector<int> tips =
      scene.anchors.tip_anchor_indices(scene.subregions);
  for (int i : tips) {
    const int region = scene.anchors.anchors[i].region;
    int target = -1;
    if (region == phalange_region(0, 2)) target = 0;  // index tip
    if (region == phalange_region(1, 2)) target = 1;  // middle tip
    if (target < 0) continue;
    scene.springs.attractive.push_back({i, 3 * target, 1.0});
  }
  return scene;
}

}  // namespace cpf
