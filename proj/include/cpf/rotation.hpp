#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cpf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-angle rotation: magnitude of the vector is the angle in radians.
struct Rotation {
  Vec3 axis_angle = Vec3::Zero();

  double angle() const { return axis_angle.norm(); }
};

/// Rigid transform. Translation is in millimeters.
struct RigidPose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }
};

// Exponential map so(3) -> SO(3). Angles below 1e-8 rad use the
// second-order Taylor expansion to avoid dividing by a near-zero norm.
Mat3 rotation_to_matrix(const Rotation& r);

Rotation matrix_to_rotation(const Mat3& m);

// Derivative of rotation_to_matrix with respect to component i of the
// axis-angle vector (Gallego & Yezzi closed form).
Mat3 rotation_matrix_derivative(const Rotation& r, int i);

Vec3 apply_pose(const RigidPose& p, const Vec3& x);
RigidPose compose(const RigidPose& a, const RigidPose& b);
RigidPose inverse(const RigidPose& p);

}  // namespace cpf
