#pragma once

#include <map>
#include <string>
#include <vector>

#include "cpf/mesh.hpp"

namespace cpf {

struct HandModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kJointCount = 16;      // wrist + 5 fingers x 3 joints
constexpr int kArticulations = 15;   // rotating joints (all but the wrist)
constexpr int kFingerCount = 5;

/// 16-joint tree in the canonical flat pose. Joint 0 is the wrist; finger f
/// occupies joints 1+3f (knuckle), 2+3f, 3+3f. tip_positions give the
/// fingertip endpoint of each leaf joint's distal link.
struct KinematicTree {
  std::vector<int> parent;             // -1 for the wrist
  std::vector<Vec3> rest_positions;    // mm
  std::vector<bool> knuckle;           // true for the 5 knuckle joints
  std::map<int, Vec3> tip_positions;   // leaf joint -> fingertip (mm)

  std::vector<std::vector<int>> children() const;
  void validate() const;
};

struct SkinWeight {
  int joint;
  double weight;
};

/// Linear-blend-skinned hand: canonical template plus sparse per-vertex
/// weights. Immutable after construction.
struct SkinnedHand {
  KinematicTree tree;
  Mesh template_mesh;
  std::vector<std::vector<SkinWeight>> skin_weights;  // per vertex

  void validate() const;
};

/// Wrist rigid pose plus 15 per-joint axis-angle rotations. Rotation i
/// belongs to joint i+1 and is expressed in canonical coordinates of that
/// joint's parent-aligned frame.
struct HandPose {
  RigidPose wrist;
  std::vector<Rotation> joint_rotations;  // exactly 15

  static HandPose zero();
  void validate() const;
};

/// Orthonormal right-handed triad per joint: finger pointing (twist),
/// side-spread (splay) and flexion (bend) directions.
struct TsbFrame {
  Vec3 twist, splay, bend;
};

// Twist points from the joint to its first child (fingertip for leaves);
// bend = twist x up, splay = bend x twist, all normalized.
std::vector<TsbFrame> derive_tsb_frames(const KinematicTree& tree,
                                        const Vec3& up_axis = Vec3(0, 1, 0));

struct TsbComponents {
  double twist = 0, splay = 0, bend = 0;  // unit rotation axis dotted with frame
  double bend_angle = 0;                  // radians
};

// Components of the rotation axis in the frame. The bend angle is the full
// rotation angle when the bend component dominates (|bend| > 0.9), otherwise
// the angle scaled by |bend component|.
TsbComponents decompose_rotation_tsb(const Rotation& r, const TsbFrame& frame);

/// Per-joint world transforms of a posed kinematic chain (wrist pose not
/// yet applied).
struct FkResult {
  std::vector<Mat3> rotation;   // global rotation per joint
  std::vector<Vec3> position;   // posed joint position per joint
};

FkResult forward_kinematics(const KinematicTree& tree,
                            const std::vector<Rotation>& joint_rotations);

// Linear blend skinning followed by the wrist rigid transform.
std::vector<Vec3> skin_vertices(const SkinnedHand& hand, const FkResult& fk,
                                const RigidPose& wrist);

// Full pose path: FK + skinning; vertex normals recomputed from geometry.
Mesh pose_hand(const SkinnedHand& hand, const HandPose& pose);

/// Dimensions of the procedural capsule-and-box hand, millimeters.
struct SynthHandParams {
  double scale = 1.0;
  double palm_x_min = -10, palm_x_max = 80;
  double palm_half_thickness = 12;
  double palm_z_min = -30, palm_z_max = 32;
  int palm_divisions_x = 20, palm_divisions_y = 3, palm_divisions_z = 14;
  struct Finger {
    Vec3 knuckle;                       // MCP position
    double proximal, intermediate, distal;  // segment lengths
    double radius;
    Vec3 dir = Vec3(1, 0, 0);           // pointing direction in the flat pose
  };
  std::vector<Finger> fingers;  // index, middle, ring, pinky, thumb
  int segments = 12;      // vertices around each finger ring
  int cap_rings = 3;
  double station_step = 5.0;  // ring spacing along the finger
  double blend_width = 4.0;   // skin weight ramp around interior joints

  static SynthHandParams defaults();
};

// Deterministic watertight hand; every vertex skinned, weights sum to 1.
SkinnedHand synth_hand(const SynthHandParams& params = SynthHandParams::defaults());

// Hand model bundle: template OBJ path + tree + weights (JSON, versioned).
SkinnedHand load_hand_model(const std::string& path);
void save_hand_model(const SkinnedHand& hand, const std::string& path,
                     const std::string& obj_path);

}  // namespace cpf
