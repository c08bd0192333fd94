#include <doctest.h>

#include <cmath>
#include <set>

#include "spatialqa/errors.hpp"
#include "spatialqa/simulator.hpp"

using namespace spatialqa;

namespace {

Scene open_room() {
  Scene s;
  s.scene_id = "sim";
  s.room.width = 10.0;
  s.room.depth = 10.0;
  s.camera.position = {5.0, 1.5, 5.0};
  s.camera.yaw = 0.0;
  return s;
}

ObjectInstance block(const std::string& id, const std::string& cls, Vec3 pos, double w, double d,
                     double h) {
  ObjectInstance o;
  o.instance_id = id;
  o.class_name = cls;
  o.chosen_phrase = "plain " + cls;
  o.position = pos;
  o.footprint_w = w;
  o.footprint_d = d;
  o.height = h;
  return o;
}

bool same_pose(const CameraPose& a, const CameraPose& b, double eps = 1e-9) {
  return std::fabs(a.position.x - b.position.x) < eps &&
         std::fabs(a.position.z - b.position.z) < eps &&
         std::fabs(std::remainder(a.yaw - b.yaw, 360.0)) < eps;
}

}  // namespace

TEST_CASE("rotations invert and compose mod 360") {
  Scene s = open_room();
  const Scene r = std::get<Scene>(apply_action(s, RotateRight{30}));
  const Scene back = std::get<Scene>(apply_action(r, RotateLeft{30}));
  CHECK(same_pose(back.camera, s.camera));

  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(0, 360);
    const double b = rng.uniform(0, 360);
    Scene s2 = open_room();
    s2.camera.yaw = rng.uniform(0, 360);
    const Scene rot = std::get<Scene>(apply_action(std::get<Scene>(apply_action(s2, RotateRight{a})),
                                            RotateRight{b}));
    const double expected = std::fmod(s2.camera.yaw + a + b, 360.0);
    CHECK(std::fabs(std::remainder(rot.camera.yaw - expected, 360.0)) < 1e-9);
  }
}

TEST_CASE("MoveAhead translates along the heading and respects blocks") {
  Scene s = open_room();
  const Scene moved = std::get<Scene>(apply_action(s, MoveAhead{0.3}));
  CHECK(moved.camera.position.z == doctest::Approx(5.3).epsilon(1e-12));
  CHECK(moved.camera.position.x == doctest::Approx(5.0).epsilon(1e-12));

  // Displacement is exactly d * (sin yaw, 0, cos yaw) for random yaws.
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    Scene s2 = open_room();
    s2.camera.yaw = round9(rng.uniform(0, 360));
    const double d = round9(rng.uniform(0.1, 0.5));
    const auto res = apply_action(s2, MoveAhead{d});
    if (std::holds_alternative<ActionBlocked>(res)) continue;
    const Scene m = std::get<Scene>(res);
    const double a = deg2rad(s2.camera.yaw);
    // Positions are quantized to 9 decimals when stored.
    CHECK(m.camera.position.x == round9(s2.camera.position.x + d * std::sin(a)));
    CHECK(m.camera.position.z == round9(s2.camera.position.z + d * std::cos(a)));
  }

  // Walking out of the room is blocked.
  Scene near_wall = open_room();
  near_wall.camera.position = {5.0, 1.5, 9.9};
  const auto out = apply_action(near_wall, MoveAhead{0.3});
  REQUIRE(std::holds_alternative<ActionBlocked>(out));
  CHECK(std::get<ActionBlocked>(out).reason == ActionBlocked::Reason::LeavesRoom);

  // Walking into furniture is blocked.
  Scene furnished = open_room();
  furnished.objects.push_back(block("o00", "sofa", {5.0, 0, 5.6}, 2.0, 0.9, 0.8));
  const auto bump = apply_action(furnished, MoveAhead{0.3});
  REQUIRE(std::holds_alternative<ActionBlocked>(bump));
  CHECK(std::get<ActionBlocked>(bump).reason == ActionBlocked::Reason::Overlap);
}

TEST_CASE("apply is functional: inputs never mutate") {
  Scene s = open_room();
  s.objects.push_back(block("o00", "box", {2, 0, 2}, 0.5, 0.5, 0.5));
  const Scene snapshot = s;
  (void)apply_action(s, RotateRight{45});
  (void)apply_action(s, MoveAhead{0.5});
  (void)apply_action(s, PlaceObjectAt{"o00", {3, 0, 3}});
  CHECK(s.camera.yaw == snapshot.camera.yaw);
  CHECK(s.camera.position.z == snapshot.camera.position.z);
  CHECK(s.objects[0].position.x == snapshot.objects[0].position.x);
}

TEST_CASE("PlaceObjectAt collision and isolation") {
  Scene s = open_room();
  s.objects.push_back(block("o00", "box", {2, 0, 2}, 0.5, 0.5, 0.5));
  s.objects.push_back(block("o01", "stool", {4, 0, 2}, 0.35, 0.35, 0.5));

  const auto onto = apply_action(s, PlaceObjectAt{"o00", {4, 0, 2}});
  REQUIRE(std::holds_alternative<ActionBlocked>(onto));
  CHECK(std::get<ActionBlocked>(onto).reason == ActionBlocked::Reason::Overlap);

  const auto off_room = apply_action(s, PlaceObjectAt{"o00", {-1, 0, 2}});
  REQUIRE(std::holds_alternative<ActionBlocked>(off_room));

  const auto ok = apply_action(s, PlaceObjectAt{"o00", {6, 0, 6}});
  REQUIRE(std::holds_alternative<Scene>(ok));
  const Scene& post = std::get<Scene>(ok);
  CHECK(post.objects[0].position.x == doctest::Approx(6.0));
  // Only the moved instance changed.
  CHECK(post.objects[1].position.x == s.objects[1].position.x);
  CHECK(post.camera.position.x == s.camera.position.x);

  const auto unknown = apply_action(s, PlaceObjectAt{"nope", {6, 0, 6}});
  REQUIRE(std::holds_alternative<ActionBlocked>(unknown));
  CHECK(std::get<ActionBlocked>(unknown).reason == ActionBlocked::Reason::UnknownObject);
}

TEST_CASE("ego traces: determinism, magnitudes, and replay") {
  Scene s = open_room();
  SimParams params;

  Rng a(99);
  Rng b(99);
  const ActionTrace ta = sample_ego_trace(s, a, params);
  const ActionTrace tb = sample_ego_trace(s, b, params);
  REQUIRE(ta.actions.size() == tb.actions.size());
  CHECK(ta.post_state.camera.position.x == tb.post_state.camera.position.x);
  CHECK(ta.post_state.camera.position.z == tb.post_state.camera.position.z);
  CHECK(ta.post_state.camera.yaw == tb.post_state.camera.yaw);

  // Replaying the recorded actions from the pre state reproduces the post
  // state exactly.
  Scene replay = ta.pre_state;
  for (const Action& act : ta.actions) replay = std::get<Scene>(apply_action(replay, act));
  CHECK(replay.camera.position.x == ta.post_state.camera.position.x);
  CHECK(replay.camera.position.z == ta.post_state.camera.position.z);
  CHECK(replay.camera.yaw == ta.post_state.camera.yaw);

  // Monte-Carlo conformance of the sampler.
  Rng rng(12345);
  const std::set<double> allowed{20, 30, 40, 50, 60};
  int forward = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const ActionTrace t = sample_ego_trace(s, rng, params);
    REQUIRE(t.actions.size() >= 1);
    REQUIRE(t.actions.size() <= 2);
    double angle = 0;
    if (const auto* r = std::get_if<RotateRight>(&t.actions[0])) angle = r->degrees;
    if (const auto* l = std::get_if<RotateLeft>(&t.actions[0])) angle = l->degrees;
    CHECK(allowed.count(angle) == 1);
    if (t.actions.size() == 2) {
      ++forward;
      const double d = std::get<MoveAhead>(t.actions[1]).meters;
      CHECK(d >= 0.20);
      CHECK(d <= 0.40);
    }
  }
  const double rate = static_cast<double>(forward) / n;
  CHECK(rate > 0.48);
  CHECK(rate < 0.52);
}

TEST_CASE("object moves: selection, magnitudes, isolation") {
  Scene s = open_room();
  s.camera.position = {5.0, 1.5, 1.0};
  s.camera.yaw = 0.0;
  s.objects.push_back(block("o00", "sofa", {5.0, 0, 5.0}, 2.0, 0.9, 0.8));
  SimParams params;
  const double min_px = 0.0025 * 512 * 512;

  Rng rng(31337);
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const ObjectMove m = sample_object_move(s, rng, params, min_px);
    CHECK(m.instance_id == "o00");  // only candidate
    CHECK(m.distance >= 0.25);
    CHECK(m.distance <= 0.50);
    sum += m.distance;
    // Only the chosen instance's position changes.
    CHECK(m.post_state.camera.position.x == s.camera.position.x);
    CHECK(m.post_state.objects.size() == s.objects.size());
    const double moved = pairwise_distance(m.post_state.objects[0].position,
                                           s.objects[0].position);
    CHECK(moved == doctest::Approx(m.distance).epsilon(1e-6));
  }
  const double mean = sum / n;
  CHECK(mean > 0.365);
  CHECK(mean < 0.385);

  Scene empty = open_room();
  CHECK_THROWS_AS(sample_object_move(empty, rng, params, min_px), NoMovableObject);
}

TEST_CASE("teleport to mark: window, turn, navigability") {
  Scene s = open_room();
  s.camera.position = {5.0, 1.5, 1.0};
  s.camera.yaw = 0.0;
  s.objects.push_back(block("o00", "sofa", {5.0, 0, 6.0}, 2.0, 0.9, 0.8));
  SimParams params;

  Rng rng(777);
  for (int i = 0; i < 200; ++i) {
    const MarkTeleport mt = teleport_to_mark(s, rng, params);
    CHECK(mt.mark.u >= 0.2 * 512);
    CHECK(mt.mark.u <= 0.8 * 512);
    CHECK(mt.mark.v >= 0.2 * 512);
    CHECK(mt.mark.v <= 0.8 * 512);
    // Turn magnitude is exactly 90 degrees in the recorded direction.
    const double expected = wrap_degrees(s.camera.yaw + (mt.turned_right ? 90.0 : -90.0));
    CHECK(mt.post_state.camera.yaw == doctest::Approx(expected));
    // The target is navigable floor at camera height.
    CHECK(s.navigable(mt.action.target.x, mt.action.target.z));
    CHECK(mt.action.target.y == s.camera.position.y);
    // The mark raycast reprojects to the sampled pixel.
    const auto hit = raycast_to_floor(mt.mark, s.camera, s.intrinsics, 0.0);
    REQUIRE(hit.has_value());
    CHECK(std::fabs(hit->x - mt.action.target.x) < 1e-6);
    CHECK(std::fabs(hit->z - mt.action.target.z) < 1e-6);
  }

  // Forced directions share the same mark when fed the same stream.
  Rng r1(555);
  Rng r2(555);
  const MarkTeleport left = teleport_to_mark_turning(s, r1, params, false);
  const MarkTeleport right = teleport_to_mark_turning(s, r2, params, true);
  CHECK(left.mark.u == right.mark.u);
  CHECK(left.mark.v == right.mark.v);
  CHECK(left.action.target.x == right.action.target.x);
  CHECK(wrap_degrees(right.post_state.camera.yaw - left.post_state.camera.yaw) ==
        doctest::Approx(180.0));
}

TEST_CASE("teleport into a blocked room throws NoNavigablePoint") {
  Scene s = open_room();
  // Carpet the whole room with one giant footprint so nothing is navigable.
  s.objects.push_back(block("o00", "bed", {5, 0, 5}, 9.9, 9.9, 0.5));
  s.camera.position = {5.0, 1.5, 0.02};
  SimParams params;
  Rng rng(1);
  CHECK_THROWS_AS(teleport_to_mark(s, rng, params), NoNavigablePoint);
}
