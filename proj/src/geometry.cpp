#include "spatialqa/geometry.hpp"

namespace spatialqa {

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w;
}

double round9(double v) { return std::round(v * 1e9) / 1e9; }

double pairwise_distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

Mat2 rotation_matrix(double yaw_deg) {
  const double a = deg2rad(yaw_deg);
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c, -s, s, c};
}

CamFramePoint normalize_to_camera(const Vec3& p, const CameraPose& cam) {
  const Mat2 r = rotation_matrix(cam.yaw);
  auto [xp, zp] = r.apply(p.x - cam.position.x, p.z - cam.position.z);
  return {xp, p.y, zp};
}

LateralRelation lateral_relation(const CamFramePoint& a, const CamFramePoint& b, double tie_eps) {
  if (a.x_prime < b.x_prime - tie_eps) return LateralRelation::Left;
  if (a.x_prime > b.x_prime + tie_eps) return LateralRelation::Right;
  return LateralRelation::Tie;
}

DepthRelation depth_relation(const CamFramePoint& a, const CamFramePoint& b, double tie_eps) {
  if (a.z_prime < b.z_prime - tie_eps) return DepthRelation::Closer;
  if (a.z_prime > b.z_prime + tie_eps) return DepthRelation::Further;
  return DepthRelation::Tie;
}

double aiming_angle(const CamFramePoint& p) {
  if (p.x_prime == 0.0 && p.z_prime == 0.0) {
    throw ObjectAtCamera("aiming_angle: point coincides with the camera");
  }
  double deg = rad2deg(std::atan2(p.x_prime, p.z_prime));
  if (deg <= -180.0) deg = 180.0;  // map the branch cut to +180
  return deg;
}

Aim classify_aim(double alpha_deg, double eps_deg) {
  if (std::fabs(alpha_deg) <= eps_deg) return {AimClass::RoughlyStraight, 0.0};
  if (alpha_deg < 0.0) return {AimClass::TurnLeft, -alpha_deg};
  return {AimClass::TurnRight, alpha_deg};
}

std::optional<Pixel> project_to_image(const Vec3& p, const CameraPose& cam, const Intrinsics& K) {
  const CamFramePoint c = normalize_to_camera(p, cam);
  if (c.z_prime <= 0.0) return std::nullopt;
  const double y_rel = c.y - cam.position.y;
  return Pixel{K.cx() + K.fx() * c.x_prime / c.z_prime,
               K.cy() - K.fy() * y_rel / c.z_prime};
}

Vec3 pixel_ray_direction(const Pixel& px, const CameraPose& cam, const Intrinsics& K) {
  // Camera-frame direction through the pixel; v grows downward in the image.
  const double dx = (px.u - K.cx()) / K.fx();
  const double dy = -(px.v - K.cy()) / K.fy();
  const double dz = 1.0;
  // Camera frame -> world: inverse of the normalization rotation.
  const Mat2 r_inv = rotation_matrix(-cam.yaw);
  auto [wx, wz] = r_inv.apply(dx, dz);
  return {wx, dy, wz};
}

std::optional<Vec3> raycast_to_floor(const Pixel& px, const CameraPose& cam, const Intrinsics& K,
                                     double floor_y) {
  const Vec3 dir = pixel_ray_direction(px, cam, K);
  if (dir.y >= 0.0) return std::nullopt;  // at or above horizontal
  const double t = (floor_y - cam.position.y) / dir.y;
  if (t <= 0.0) return std::nullopt;  // camera below the floor plane
  return cam.position + dir * t;
}

}  // namespace spatialqa
