#pragma once

#include <Eigen/Dense>

namespace tdvs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform of the camera/tip frame expressed in the robot base frame:
/// p_world = rotation * p_local + translation.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

Mat3 rot_z(double angle_rad);
Mat3 rot_y(double angle_rad);

/// True iff ||R^T R - I||_inf < tol and det(R) = 1 within tol.
bool is_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace tdvs
