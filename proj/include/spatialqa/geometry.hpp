#pragma once

// Coordinate-frame math shared by the whole pipeline.
//
// World frame: x lateral, y up (height above the floor), z depth. Yaw is
// degrees clockwise about the y-axis seen from above, with 0 facing +z, so
// the heading vector is (sin yaw, 0, cos yaw) and +x is to the right of a
// yaw-0 camera. Camera-frame normalization rotates the x-z plane so the
// camera faces +z'; x' is negative to the viewer's left, y keeps the world
// height.

#include <cmath>
#include <optional>
#include <utility>

#include "spatialqa/errors.hpp"

namespace spatialqa {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps an angle to [0, 360).
double wrap_degrees(double deg);

/// Rounds to 9 decimal places. Every sampled world quantity passes through
/// this before it is stored, so a record's serialized derivation reproduces
/// the generator's arithmetic bit-for-bit.
double round9(double v);

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Vec3 operator+(const Vec3& r) const { return {x + r.x, y + r.y, z + r.z}; }
  Vec3 operator-(const Vec3& r) const { return {x - r.x, y - r.y, z - r.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Euclidean distance between two world points.
double pairwise_distance(const Vec3& a, const Vec3& b);

struct CameraPose {
  Vec3 position;   // y is the (fixed) camera height
  double yaw{0.0};  // degrees clockwise about y, in [0, 360)
};

/// A point normalized to a camera: x' right of the viewer, z' ahead,
/// y unchanged world height.
struct CamFramePoint {
  double x_prime{0.0};
  double y{0.0};
  double z_prime{0.0};
};

struct Intrinsics {
  double horizontal_fov{90.0};  // degrees, (0, 180)
  int width{512};
  int height{512};

  double fx() const { return (width / 2.0) / std::tan(deg2rad(horizontal_fov) / 2.0); }
  double fy() const { return fx(); }  // square pixels
  double cx() const { return width / 2.0; }
  double cy() const { return height / 2.0; }
};

struct Pixel {
  double u{0.0};
  double v{0.0};
};

/// 2x2 matrix acting on (x, z) bird's-eye coordinates.
struct Mat2 {
  double m00{1.0}, m01{0.0};
  double m10{0.0}, m11{1.0};

  Mat2 operator*(const Mat2& r) const {
    return {m00 * r.m00 + m01 * r.m10, m00 * r.m01 + m01 * r.m11,
            m10 * r.m00 + m11 * r.m10, m10 * r.m01 + m11 * r.m11};
  }
  std::pair<double, double> apply(double x, double z) const {
    return {m00 * x + m01 * z, m10 * x + m11 * z};
  }
  Mat2 transpose() const { return {m00, m10, m01, m11}; }
};

/// R(yaw) = [[cos a, -sin a], [sin a, cos a]], angle in degrees.
Mat2 rotation_matrix(double yaw_deg);

/// [x'; z'] = R(cam.yaw) * [p.x - cam.x; p.z - cam.z]; y passes through.
/// The camera itself maps to (0, cam.y, 0) exactly.
CamFramePoint normalize_to_camera(const Vec3& p, const CameraPose& cam);

enum class LateralRelation { Left, Right, Tie };
enum class DepthRelation { Closer, Further, Tie };

/// Where is a relative to b in the viewer's frame? Ties (within tie_eps on
/// x') are reported so callers can discard ambiguous pairs.
LateralRelation lateral_relation(const CamFramePoint& a, const CamFramePoint& b, double tie_eps);

/// Closer/Further on z' with the same tie band.
DepthRelation depth_relation(const CamFramePoint& a, const CamFramePoint& b, double tie_eps);

/// Signed horizontal angle to a camera-frame point, degrees in (-180, 180];
/// negative means the viewer must turn left. Two-argument arctangent, so
/// points beside or behind the camera are handled; for z' > 0 it equals
/// arctan(x'/z'). Throws ObjectAtCamera when x' = z' = 0.
double aiming_angle(const CamFramePoint& p);

enum class AimClass { RoughlyStraight, TurnLeft, TurnRight };

struct Aim {
  AimClass cls;
  double magnitude;  // |alpha| degrees; 0 when roughly straight
};

/// RoughlyStraight iff |alpha| <= eps (boundary inclusive), else a signed turn.
Aim classify_aim(double alpha_deg, double eps_deg);

/// Pinhole projection of a world point. Empty result means the point is at
/// or behind the camera plane (z' <= 0).
std::optional<Pixel> project_to_image(const Vec3& p, const CameraPose& cam, const Intrinsics& K);

/// World-frame direction of the camera ray through a pixel (not normalized).
Vec3 pixel_ray_direction(const Pixel& px, const CameraPose& cam, const Intrinsics& K);

/// Intersects the camera ray through a pixel with the plane y = floor_y.
/// Empty result when the ray points at or above horizontal.
std::optional<Vec3> raycast_to_floor(const Pixel& px, const CameraPose& cam, const Intrinsics& K,
                                     double floor_y);

}  // namespace spatialqa
