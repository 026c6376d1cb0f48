#include "cpf/hand_model.hpp"

#include <cmath>

namespace cpf {

std::vector<std::vector<int>> KinematicTree::children() const {
  std::vector<std::vector<int>> out(parent.size());
  for (std::size_t j = 0; j < parent.size(); ++j) {
    if (parent[j] >= 0) out[parent[j]].push_back(static_cast<int>(j));
  }
  return out;
}

void KinematicTree::validate() const {
  if (parent.size() != kJointCount || rest_positions.size() != kJointCount ||
      knuckle.size() != kJointCount) {
    throw HandModelError("kinematic tree must have exactly 16 joints");
  }
  int roots = 0;
  for (std::size_t j = 0; j < parent.size(); ++j) {
    if (parent[j] < 0) {
      ++roots;
    } else if (parent[j] >= static_cast<int>(j)) {
      // parents must precede children; also rules out cycles
      throw HandModelError("joint parents must be topologically ordered");
    }
  }
  if (roots != 1) throw HandModelError("tree must have exactly one root");
  int knuckles = 0;
  for (bool k : knuckle) knuckles += k ? 1 : 0;
  if (knuckles != kFingerCount) {
    throw HandModelError("expected exactly 5 knuckle joints");
  }
}

void SkinnedHand::validate() const {
  tree.validate();
  validate_mesh(template_mesh);
  if (skin_weights.size() != template_mesh.vertices.size()) {
    throw HandModelError("skin weight count does not match vertex count");
  }
  for (const auto& weights : skin_weights) {
    if (weights.empty()) throw HandModelError("unskinned vertex");
    double sum = 0;
    for (const auto& w : weights) {
      if (w.joint < 0 || w.joint >= kJointCount || w.weight < 0) {
        throw HandModelError("invalid skin weight");
      }
      sum += w.weight;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw HandModelError("skin weights must sum to 1");
    }
  }
}

HandPose HandPose::zero() {
  HandPose pose;
  pose.joint_rotations.assign(kArticulations, Rotation{});
  return pose;
}

void HandPose::validate() const {
  if (joint_rotations.size() != kArticulations) {
    throw HandModelError("hand pose needs exactly 15 joint rotations");
  }
  for (const auto& r : joint_rotations) {
    if (!r.axis_angle.allFinite()) {
      throw HandModelError("non-finite joint rotation");
    }
  }
  if (!wrist.rotation.axis_angle.allFinite() ||
      !wrist.translation.allFinite()) {
    throw HandModelError("non-finite wrist pose");
  }
}

std::vector<TsbFrame> derive_tsb_frames(const KinematicTree& tree,
                                        const Vec3& up_axis) {
  tree.validate();
  const auto kids = tree.children();
  std::vector<TsbFrame> frames(tree.parent.size());
  for (std::size_t j = 0; j < tree.parent.size(); ++j) {
    Vec3 toward;
    if (!kids[j].empty()) {
      toward = tree.rest_positions[kids[j].front()] - tree.rest_positions[j];
    } else if (auto it = tree.tip_positions.find(static_cast<int>(j));
               it != tree.tip_positions.end()) {
      toward = it->second - tree.rest_positions[j];
    } else {
      // leaf without a tip record: continue the parent link direction
      toward = tree.rest_positions[j] - tree.rest_positions[tree.parent[j]];
    }
    const double len = toward.norm();
    if (len < 1e-9) {
      throw HandModelError("joint " + std::to_string(j) +
                           " coincides with its child; twist undefined");
    }
    TsbFrame& f = frames[j];
    f.twist = toward / len;
    Vec3 bend = f.twist.cross(up_axis);
    const double blen = bend.norm();
    if (blen < 1e-9) {
      throw HandModelError("twist axis of joint " + std::to_string(j) +
                           " is parallel to the up axis");
    }
    f.bend = bend / blen;
    f.splay = f.bend.cross(f.twist);
  }
  return frames;
}

TsbComponents decompose_rotation_tsb(const Rotation& r, const TsbFrame& frame) {
  TsbComponents out;
  const double angle = r.angle();
  if (angle < 1e-12) return out;
  const Vec3 axis = r.axis_angle / angle;
  out.twist = axis.dot(frame.twist);
  out.splay = axis.dot(frame.splay);
  out.bend = axis.dot(frame.bend);
  out.bend_angle =
      (std::abs(out.bend) > 0.9) ? angle : angle * std::abs(out.bend);
  return out;
}

FkResult forward_kinematics(const KinematicTree& tree,
                            const std::vector<Rotation>& joint_rotations) {
  if (joint_rotations.size() != kArticulations) {
    throw HandModelError("forward kinematics needs 15 joint rotations");
  }
  FkResult fk;
  fk.rotation.resize(tree.parent.size());
  fk.position.resize(tree.parent.size());
  fk.rotation[0] = Mat3::Identity();
  fk.position[0] = tree.rest_positions[0];
  for (std::size_t j = 1; j < tree.parent.size(); ++j) {
    const int p = tree.parent[j];
    const Mat3 local = rotation_to_matrix(joint_rotations[j - 1]);
    fk.rotation[j] = fk.rotation[p] * local;
    fk.position[j] =
        fk.position[p] +
        fk.rotation[p] * (tree.rest_positions[j] - tree.rest_positions[p]);
  }
  return fk;
}

std::vector<Vec3> skin_vertices(const SkinnedHand& hand, const FkResult& fk,
                                const RigidPose& wrist) {
  const Mat3 rw = rotation_to_matrix(wrist.rotation);
  std::vector<Vec3> out(hand.template_mesh.vertices.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& v = hand.template_mesh.vertices[i];
    Vec3 blended = Vec3::Zero();
    for (const auto& w : hand.skin_weights[i]) {
      blended += w.weight *
                 (fk.rotation[w.joint] *
                      (v - hand.tree.rest_positions[w.joint]) +
                  fk.position[w.joint]);
    }
    out[i] = rw * blended + wrist.translation;
  }
  return out;
}

Mesh pose_hand(const SkinnedHand& hand, const HandPose& pose) {
  pose.validate();
  const FkResult fk = forward_kinematics(hand.tree, pose.joint_rotations);
  Mesh out;
  out.vertices = skin_vertices(hand, fk, pose.wrist);
  out.faces = hand.template_mesh.faces;
  out.vertex_normals = compute_vertex_normals(out);
  return out;
}

}  // namespace cpf
