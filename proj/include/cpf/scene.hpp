#pragma once

#include <cstdint>

#include "cpf/contact_labels.hpp"
#include "cpf/optimizer.hpp"

namespace cpf {

// Unit-style icosphere: icosahedron subdivided `subdivisions` times, vertices
// projected onto the radius. Watertight and deterministic.
Mesh make_icosphere(double radius, int subdivisions = 2,
                    const Vec3& center = Vec3::Zero());

/// Self-contained synthetic grasp: the palm resting on a large ball with the
/// fingers draped over it, ground-truth affinity labels, and a perturbed
/// initial estimate for the refiner to recover from.
struct GraspScene {
  SkinnedHand hand;
  std::vector<ControlPoint> control_points;
  SubregionMap subregions;
  AnchorSet anchors;
  HandPose gt_pose;
  Mesh gt_hand;  // posed ground truth
  Mesh object;   // world placement doubles as the ground truth
  HandPose initial_pose;
  AffinityAnnotation annotation;
  ContactLabels labels;
};

// Rotates the wrist by `rotation_deg` about a seeded random axis through the
// wrist joint and shifts it by `translation_mm` along a seeded random
// direction. Finger joints are left untouched.
HandPose perturb_wrist(const HandPose& pose, const KinematicTree& tree,
                       std::uint64_t seed, double translation_mm,
                       double rotation_deg);

// radius_margin shifts the sphere radius relative to the closest
// ground-truth hand vertex: negative leaves clearance, positive makes the
// ground truth penetrate by that many millimeters.
GraspScene make_sphere_grasp_scene(std::uint64_t seed,
                                   double translation_mm = 15.0,
                                   double rotation_deg = 10.0,
                                   double radius_margin = -1.0);

/// Adversarial target set: a flat hand with springs that can only be
/// satisfied by anatomically impossible joint motion. Used to exercise the
/// anatomical penalty.
struct GuardScene {
  SkinnedHand hand;
  std::vector<ControlPoint> control_points;
  SubregionMap subregions;
  AnchorSet anchors;
  Mesh object;  // one micro-triangle per target point
  SpringSystem springs;
  HandPose initial_pose;  // flat
};

GuardScene make_guard_scene();

}  // namespace cpf
