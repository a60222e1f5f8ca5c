#pragma once

#include <array>
#include <cstdint>

#include "tdvs/geometry.hpp"
#include "tdvs/image.hpp"

namespace tdvs {

struct CameraIntrinsics {
  int width_px = 640;
  int height_px = 480;
  double horizontal_fov_deg = 19.0;

  /// Square pixels; same focal length for both axes.
  double focal_px() const;
};

/// A single planar textured target: the plane z = plane_distance_m in the
/// robot base frame, texture centered on the base-frame z-axis and spanning
/// [-halfwidth, +halfwidth] in x and y. Everything off the texture is
/// background.
struct PlanarScene {
  ImageBuffer target_texture;
  double plane_distance_m = 0.5;
  double plane_halfwidth_m = 0.25;
  std::array<float, 3> background{0.0f, 0.0f, 0.0f};
};

/// Width of the plane patch seen by the camera at the given distance,
/// 2 * distance * tan(fov / 2).
double footprint_width(double distance_m, double horizontal_fov_deg);

/// Pinhole ray-cast of the planar scene from a camera pose (optical axis =
/// local +z, image x right, image y down). Rays that miss the texture extent
/// or point away from the plane return the background color.
ImageBuffer render(const PlanarScene& scene, const RigidPose& camera_pose,
                   const CameraIntrinsics& intr);

/// Deterministic multi-scale test texture: smooth color field plus soft
/// blobs and value-noise octaves. Used when no target PNG is supplied.
ImageBuffer make_procedural_texture(std::uint64_t seed, int size);

}  // namespace tdvs
