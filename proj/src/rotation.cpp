#include "cpf/rotation.hpp"

#include <cmath>

namespace cpf {

namespace {
Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}
}  // namespace

Mat3 rotation_to_matrix(const Rotation& r) {
  const double theta = r.angle();
  const Mat3 k = skew(r.axis_angle);
  if (theta < 1e-8) {
    // exp(K) ~ I + K + K^2/2 for tiny angles
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

Rotation matrix_to_rotation(const Mat3& m) {
  Eigen::AngleAxisd aa(m);
  return Rotation{aa.angle() * aa.axis()};
}

Mat3 rotation_matrix_derivative(const Rotation& r, int i) {
  const double theta2 = r.axis_angle.squaredNorm();
  Vec3 e = Vec3::Zero();
  e[i] = 1.0;
  if (theta2 < 1e-16) {
    return skew(e);
  }
  const Mat3 rot = rotation_to_matrix(r);
  const Vec3& v = r.axis_angle;
  const Vec3 w = v.cross((Mat3::Identity() - rot) * e);
  return (v[i] * skew(v) + skew(w)) / theta2 * rot;
}

Vec3 apply_pose(const RigidPose& p, const Vec3& x) {
  return rotation_to_matrix(p.rotation) * x + p.translation;
}

RigidPose compose(const RigidPose& a, const RigidPose& b) {
  const Mat3 ra = rotation_to_matrix(a.rotation);
  const Mat3 rb = rotation_to_matrix(b.rotation);
  RigidPose out;
  out.rotation = matrix_to_rotation(ra * rb);
  out.translation = ra * b.translation + a.translation;
  return out;
}

RigidPose inverse(const RigidPose& p) {
  const Mat3 r = rotation_to_matrix(p.rotation);
  RigidPose out;
  out.rotation = matrix_to_rotation(r.transpose());
  out.translation = -(r.transpose() * p.translation);
  return out;
}

}  // namespace cpf
