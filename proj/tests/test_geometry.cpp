#include <doctest.h>

#include <cmath>

#include "spatialqa/geometry.hpp"
#include "spatialqa/rng.hpp"

using namespace spatialqa;

namespace {

// Independent oracle for camera normalization: a full 3x3 homogeneous
// transform in the x-z plane, translation then rotation, built without
// normalize_to_camera.
struct Homogeneous {
  double m[3][3];

  static Homogeneous translation(double tx, double tz) {
    return {{{1, 0, tx}, {0, 1, tz}, {0, 0, 1}}};
  }
  static Homogeneous rotation_deg(double deg) {
    const double a = deg2rad(deg);
    return {{{std::cos(a), -std::sin(a), 0}, {std::sin(a), std::cos(a), 0}, {0, 0, 1}}};
  }
  Homogeneous operator*(const Homogeneous& r) const {
    Homogeneous out{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        out.m[i][j] = 0;
        for (int k = 0; k < 3; ++k) out.m[i][j] += m[i][k] * r.m[k][j];
      }
    }
    return out;
  }
  std::pair<double, double> apply(double x, double z) const {
    return {m[0][0] * x + m[0][1] * z + m[0][2], m[1][0] * x + m[1][1] * z + m[1][2]};
  }
};

}  // namespace

TEST_CASE("rotation_matrix matches the defining formula") {
  const Mat2 id = rotation_matrix(0.0);
  CHECK(id.m00 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id.m01 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(id.m10 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(id.m11 == doctest::Approx(1.0).epsilon(1e-12));

  const Mat2 r90 = rotation_matrix(90.0);
  CHECK(r90.m00 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r90.m01 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r90.m10 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r90.m11 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation inverse and orthonormality over random yaws") {
  Rng rng(42);
  for (int i = 0; i < 10000; ++i) {
    const double yaw = rng.uniform(-720.0, 720.0);
    const Mat2 r = rotation_matrix(yaw);
    const Mat2 ri = rotation_matrix(-yaw);
    const Mat2 prod = r * ri;
    CHECK(std::fabs(prod.m00 - 1.0) < 1e-9);
    CHECK(std::fabs(prod.m01) < 1e-9);
    CHECK(std::fabs(prod.m10) < 1e-9);
    CHECK(std::fabs(prod.m11 - 1.0) < 1e-9);
    const Mat2 gram = r.transpose() * r;
    CHECK(std::fabs(gram.m00 - 1.0) < 1e-9);
    CHECK(std::fabs(gram.m01) < 1e-9);
    CHECK(std::fabs(gram.m10) < 1e-9);
    CHECK(std::fabs(gram.m11 - 1.0) < 1e-9);
  }
}

TEST_CASE("normalize_to_camera axis cases") {
  CameraPose cam;
  cam.position = {2.0, 1.5, 3.0};
  cam.yaw = 0.0;

  // Point one meter to the +x side at yaw 0: to the right, abreast.
  const auto right = normalize_to_camera({3.0, 0.7, 3.0}, cam);
  CHECK(right.x_prime == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(right.z_prime == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(right.y == doctest::Approx(0.7));

  // The camera maps to (0, cam.y, 0) exactly.
  const auto self = normalize_to_camera(cam.position, cam);
  CHECK(self.x_prime == 0.0);
  CHECK(self.z_prime == 0.0);
  CHECK(self.y == cam.position.y);

  // yaw 90: the +x neighbor is dead ahead.
  cam.yaw = 90.0;
  const auto ahead = normalize_to_camera({3.0, 0.0, 3.0}, cam);
  CHECK(ahead.x_prime == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ahead.z_prime == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize_to_camera agrees with a homogeneous-transform oracle") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    CameraPose cam;
    cam.position = {rng.uniform(-5, 5), 1.5, rng.uniform(-5, 5)};
    cam.yaw = rng.uniform(0, 360);
    const Vec3 p{rng.uniform(-8, 8), rng.uniform(0, 3), rng.uniform(-8, 8)};
    const auto got = normalize_to_camera(p, cam);
    const Homogeneous oracle = Homogeneous::rotation_deg(cam.yaw) *
                               Homogeneous::translation(-cam.position.x, -cam.position.z);
    const auto [ex, ez] = oracle.apply(p.x, p.z);
    CHECK(got.x_prime == doctest::Approx(ex).epsilon(1e-9));
    CHECK(got.z_prime == doctest::Approx(ez).epsilon(1e-9));
    CHECK(got.y == p.y);
  }
}

TEST_CASE("normalization composes: rotating the frame by b equals yaw a+b") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    CameraPose cam;
    cam.position = {rng.uniform(-5, 5), 1.5, rng.uniform(-5, 5)};
    cam.yaw = rng.uniform(0, 360);
    const double extra = rng.uniform(-360, 360);
    const Vec3 p{rng.uniform(-8, 8), 1.0, rng.uniform(-8, 8)};

    const auto base = normalize_to_camera(p, cam);
    const auto [x2, z2] = rotation_matrix(extra).apply(base.x_prime, base.z_prime);
    CameraPose cam2 = cam;
    cam2.yaw = cam.yaw + extra;
    const auto direct = normalize_to_camera(p, cam2);
    CHECK(std::fabs(direct.x_prime - x2) < 1e-9);
    CHECK(std::fabs(direct.z_prime - z2) < 1e-9);
  }
}

TEST_CASE("lateral and depth relations with tie bands") {
  CamFramePoint a{-0.5, 0, 2.0};
  CamFramePoint b{0.5, 0, 2.0};
  CHECK(lateral_relation(a, b, 0.02) == LateralRelation::Left);
  CHECK(lateral_relation(b, a, 0.02) == LateralRelation::Right);
  CHECK(lateral_relation(a, a, 0.02) == LateralRelation::Tie);

  CamFramePoint near{0, 0, 1.0};
  CamFramePoint far{0, 0, 3.0};
  CHECK(depth_relation(near, far, 0.02) == DepthRelation::Closer);
  CHECK(depth_relation(far, near, 0.02) == DepthRelation::Further);
  CHECK(depth_relation(near, near, 0.02) == DepthRelation::Tie);
}

TEST_CASE("lateral antisymmetry outside the tie band") {
  Rng rng(99);
  for (int i = 0; i < 5000; ++i) {
    CamFramePoint a{rng.uniform(-4, 4), 0, rng.uniform(0.1, 6)};
    CamFramePoint b{rng.uniform(-4, 4), 0, rng.uniform(0.1, 6)};
    const auto ab = lateral_relation(a, b, 0.02);
    const auto ba = lateral_relation(b, a, 0.02);
    if (ab == LateralRelation::Left) CHECK(ba == LateralRelation::Right);
    if (ab == LateralRelation::Right) CHECK(ba == LateralRelation::Left);
    if (ab == LateralRelation::Tie) CHECK(ba == LateralRelation::Tie);
  }
}

TEST_CASE("depth relation is monotone in a.z'") {
  CamFramePoint b{0, 0, 2.0};
  bool seen_further = false;
  for (double z = 0.1; z < 5.0; z += 0.05) {
    const auto rel = depth_relation({0, 0, z}, b, 0.02);
    if (rel == DepthRelation::Further) seen_further = true;
    if (seen_further) CHECK(rel != DepthRelation::Closer);
  }
}

TEST_CASE("pairwise distance basics") {
  CHECK(pairwise_distance({0, 0, 0}, {0, 0, 0}) == 0.0);
  CHECK(pairwise_distance({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a{rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)};
    const Vec3 b{rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)};
    CHECK(pairwise_distance(a, b) == doctest::Approx(pairwise_distance(b, a)));
    CHECK(pairwise_distance(a, b) >= 0.0);
  }
}

TEST_CASE("aiming angle: straight, right, left, and the library oracle") {
  CHECK(aiming_angle({0, 0, 2}) == doctest::Approx(0.0));
  CHECK(aiming_angle({1, 0, 1}) == doctest::Approx(45.0));
  CHECK(aiming_angle({-1, 0, 1}) == doctest::Approx(-45.0));
  CHECK_THROWS_AS(aiming_angle({0, 0, 0}), ObjectAtCamera);

  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(-5, 5);
    const double z = rng.uniform(0.01, 5);
    CHECK(aiming_angle({x, 0, z}) == doctest::Approx(rad2deg(std::atan(x / z))).epsilon(1e-9));
  }
}

TEST_CASE("aiming sign agrees with the lateral convention for z' > 0") {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-6, 6);
    const double z = rng.uniform(0.001, 8);
    const double alpha = aiming_angle({x, 0, z});
    if (x > 0) CHECK(alpha > 0);
    if (x < 0) CHECK(alpha < 0);
  }
}

TEST_CASE("classify_aim boundary is inclusive") {
  CHECK(classify_aim(4.0, 10.0).cls == AimClass::RoughlyStraight);
  CHECK(classify_aim(10.0, 10.0).cls == AimClass::RoughlyStraight);
  CHECK(classify_aim(-10.0, 10.0).cls == AimClass::RoughlyStraight);
  CHECK(classify_aim(10.000001, 10.0).cls == AimClass::TurnRight);
  const Aim left = classify_aim(-30.0, 10.0);
  CHECK(left.cls == AimClass::TurnLeft);
  CHECK(left.magnitude == doctest::Approx(30.0));
}

TEST_CASE("projection: center, edge, and behind") {
  Intrinsics K;  // 90 degree fov, 512x512
  CameraPose cam;
  cam.position = {0, 1.5, 0};
  cam.yaw = 0;

  // Dead ahead at eye level projects to the image center.
  const auto center = project_to_image({0, 1.5, 2.0}, cam, K);
  REQUIRE(center.has_value());
  CHECK(center->u == doctest::Approx(256.0));
  CHECK(center->v == doctest::Approx(256.0));

  // Half-FOV azimuth at eye level lands on the right edge: x' = z' tan(45).
  const auto edge = project_to_image({2.0, 1.5, 2.0}, cam, K);
  REQUIRE(edge.has_value());
  CHECK(edge->u == doctest::Approx(512.0).epsilon(1e-9));
  CHECK(edge->v == doctest::Approx(256.0));

  CHECK_FALSE(project_to_image({0, 1.5, -2.0}, cam, K).has_value());
  CHECK_FALSE(project_to_image({0, 1.5, 0.0}, cam, K).has_value());
}

TEST_CASE("raycast: depression-angle identity, horizon, and round trip") {
  Intrinsics K;
  CameraPose cam;
  cam.position = {1.0, 1.5, 1.0};
  cam.yaw = 0;

  // A pixel below center at depression angle theta hits the floor at ground
  // distance h / tan(theta).
  const double theta = deg2rad(10.0);
  const Pixel px{K.cx(), K.cy() + K.fy() * std::tan(theta)};
  const auto hit = raycast_to_floor(px, cam, K, 0.0);
  REQUIRE(hit.has_value());
  const double ground_dist = std::hypot(hit->x - cam.position.x, hit->z - cam.position.z);
  CHECK(ground_dist == doctest::Approx(1.5 / std::tan(theta)).epsilon(1e-9));
  CHECK(hit->y == doctest::Approx(0.0));

  // Ray parallel to the floor never lands.
  CHECK_FALSE(raycast_to_floor({K.cx(), K.cy()}, cam, K, 0.0).has_value());
  // Rays above the horizon point away from the floor.
  CHECK_FALSE(raycast_to_floor({K.cx(), K.cy() - 40}, cam, K, 0.0).has_value());

  // Returned point re-projects to the input pixel.
  const auto back = project_to_image(*hit, cam, K);
  REQUIRE(back.has_value());
  CHECK(std::fabs(back->u - px.u) < 0.5);
  CHECK(std::fabs(back->v - px.v) < 0.5);
}

TEST_CASE("raycast and projection round-trip floor points within 1 mm") {
  Intrinsics K;
  Rng rng(23);
  for (int i = 0; i < 5000; ++i) {
    CameraPose cam;
    cam.position = {rng.uniform(0, 6), 1.5, rng.uniform(0, 6)};
    cam.yaw = rng.uniform(0, 360);
    const Vec3 p{rng.uniform(0, 6), 0.0, rng.uniform(0, 6)};
    const auto px = project_to_image(p, cam, K);
    if (!px) continue;
    const auto hit = raycast_to_floor(*px, cam, K, 0.0);
    REQUIRE(hit.has_value());
    CHECK(pairwise_distance(*hit, p) < 1e-3);
  }
}

TEST_CASE("wrap_degrees normalizes into [0, 360)") {
  CHECK(wrap_degrees(0.0) == 0.0);
  CHECK(wrap_degrees(360.0) == 0.0);
  CHECK(wrap_degrees(-30.0) == doctest::Approx(330.0));
  CHECK(wrap_degrees(725.0) == doctest::Approx(5.0));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_degrees(rng.uniform(-2000, 2000));
    CHECK(w >= 0.0);
    CHECK(w < 360.0);
  }
}
