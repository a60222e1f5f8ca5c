#include "tdvs/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace tdvs {

Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  return r;
}

Mat3 rot_y(double a) {
  Mat3 r;
  r << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
  return r;
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() < tol && std::abs(r.determinant() - 1.0) < tol;
}

double TendonDisplacement::norm_inf() const {
  return std::max(std::abs(q1_mm), std::abs(q2_mm));
}

double TendonDisplacement::norm2() const { return std::hypot(q1_mm, q2_mm); }

ArcParameters tendons_to_arc(const TendonDisplacement& q, const RobotGeometry& geom) {
  if (!(geom.backbone_length_m > 0.0) || !(geom.tendon_offset_m > 0.0)) {
    throw std::invalid_argument("tendons_to_arc: backbone length and tendon offset must be positive");
  }
  if (!std::isfinite(q.q1_mm) || !std::isfinite(q.q2_mm)) {
    throw std::invalid_argument("tendons_to_arc: tendon displacement must be finite");
  }
  ArcParameters arc;
  arc.arc_length = geom.backbone_length_m;
  const double q_norm_m = 1e-3 * q.norm2();
  arc.curvature = q_norm_m / (geom.tendon_offset_m * geom.backbone_length_m);
  arc.bending_plane = (q_norm_m == 0.0) ? 0.0 : std::atan2(q.q2_mm, q.q1_mm);
  return arc;
}

RigidPose arc_to_pose(const ArcParameters& arc) {
  const double kappa = arc.curvature;
  const double length = arc.arc_length;
  const double theta = kappa * length;
  const Mat3 rz = rot_z(arc.bending_plane);

  RigidPose pose;
  pose.rotation = rz * rot_y(theta) * rot_z(-arc.bending_plane);
  if (theta < kStraightnessThreshold) {
    // Series limit in theta; first order keeps the pose continuous across
    // the switch to well below 1e-9.
    pose.translation = rz * Vec3(length * theta / 2.0, 0.0, length * (1.0 - theta * theta / 6.0));
  } else {
    pose.translation = rz * Vec3((1.0 - std::cos(theta)) / kappa, 0.0, std::sin(theta) / kappa);
  }
  return pose;
}

RigidPose forward_kinematics(const TendonDisplacement& q, const RobotGeometry& geom) {
  return arc_to_pose(tendons_to_arc(q, geom));
}

}  // namespace tdvs
