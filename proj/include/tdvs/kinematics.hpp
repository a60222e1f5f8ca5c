#pragma once

#include "tdvs/geometry.hpp"

namespace tdvs {

/// Single-section robot parameters. Young's modulus, density and backbone
/// radius are carried as metadata only; the constant-curvature model does
/// not use them.
struct RobotGeometry {
  double backbone_length_m = 0.4;
  double tendon_offset_m = 0.0018;
  double backbone_radius_m = 0.0009;
  double youngs_modulus_pa = 207e9;
  double density_kg_m3 = 7800.0;
};

/// Joint state: signed pull length of the two tendon pairs, in millimeters.
/// q1 bends the robot toward the base-frame x-axis, q2 toward y.
struct TendonDisplacement {
  double q1_mm = 0.0;
  double q2_mm = 0.0;

  double norm_inf() const;
  double norm2() const;
};

struct ArcParameters {
  double curvature = 0.0;      // 1/m, >= 0
  double bending_plane = 0.0;  // rad, in (-pi, pi]
  double arc_length = 0.0;     // m, equals backbone length
};

/// Below this bending angle (curvature * length) the pose switches to the
/// straight-robot series limit.
inline constexpr double kStraightnessThreshold = 1e-6;

/// kappa = |q| / (d * L), phi = atan2(q2, q1); q = 0 gives kappa = 0, phi = 0.
ArcParameters tendons_to_arc(const TendonDisplacement& q, const RobotGeometry& geom);

/// Closed-form tip pose of a circular arc of curvature kappa bent in plane
/// phi: t = Rz(phi) [(1-cos kL)/k, 0, sin kL / k], R = Rz(phi) Ry(kL) Rz(-phi).
RigidPose arc_to_pose(const ArcParameters& arc);

RigidPose forward_kinematics(const TendonDisplacement& q, const RobotGeometry& geom);

}  // namespace tdvs
