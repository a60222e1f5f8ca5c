#include "tdvs/render.hpp"

#include <cmath>
#include <stdexcept>

namespace tdvs {

double CameraIntrinsics::focal_px() const {
  return (width_px / 2.0) / std::tan(horizontal_fov_deg * M_PI / 360.0);
}

double footprint_width(double distance_m, double horizontal_fov_deg) {
  return 2.0 * distance_m * std::tan(horizontal_fov_deg * M_PI / 360.0);
}

ImageBuffer render(const PlanarScene& scene, const RigidPose& camera_pose,
                   const CameraIntrinsics& intr) {
  if (!is_rotation(camera_pose.rotation)) {
    throw std::invalid_argument("render: camera pose rotation is not orthonormal");
  }
  if (scene.target_texture.width <= 0 || scene.target_texture.height <= 0) {
    throw std::invalid_argument("render: scene has no target texture");
  }

  const ImageBuffer& tex = scene.target_texture;
  const double hw = scene.plane_halfwidth_m;
  const double focal = intr.focal_px();
  const Mat3& rot = camera_pose.rotation;
  const Vec3& origin = camera_pose.translation;

  ImageBuffer out(intr.width_px, intr.height_px);
  for (int v = 0; v < intr.height_px; ++v) {
    for (int u = 0; u < intr.width_px; ++u) {
      const Vec3 dir_cam((u + 0.5 - intr.width_px / 2.0) / focal,
                         (v + 0.5 - intr.height_px / 2.0) / focal, 1.0);
      const Vec3 dir = rot * dir_cam;

      float r = scene.background[0], g = scene.background[1], b = scene.background[2];
      if (dir.z() > 1e-12) {
        const double t = (scene.plane_distance_m - origin.z()) / dir.z();
        if (t > 0.0) {
          const double px = origin.x() + t * dir.x();
          const double py = origin.y() + t * dir.y();
          if (std::abs(px) <= hw && std::abs(py) <= hw) {
            // Texel (j, i) center sits at world (-hw + (j + 0.5) / w * 2hw, ...).
            const double tx = (px + hw) / (2.0 * hw) * tex.width - 0.5;
            const double ty = (py + hw) / (2.0 * hw) * tex.height - 0.5;
            r = bilinear_sample(tex, tx, ty, 0);
            g = bilinear_sample(tex, tx, ty, 1);
            b = bilinear_sample(tex, tx, ty, 2);
          }
        }
      }
      out.at(u, v, 0) = r;
      out.at(u, v, 1) = g;
      out.at(u, v, 2) = b;
    }
  }
  clamp01(out);
  return out;
}

}  // namespace tdvs
