#include "spatialqa/simulator.hpp"

#include <cmath>

#include "spatialqa/errors.hpp"

namespace spatialqa {

namespace {

Vec3 heading(double yaw_deg) {
  const double a = deg2rad(yaw_deg);
  return {std::sin(a), 0.0, std::cos(a)};
}

ApplyResult rotate(const Scene& scene, double delta_deg) {
  Scene next = scene;
  next.camera.yaw = wrap_degrees(scene.camera.yaw + delta_deg);
  return next;
}

ApplyResult move_ahead(const Scene& scene, double meters) {
  const Vec3 h = heading(scene.camera.yaw);
  const double nx = round9(scene.camera.position.x + meters * h.x);
  const double nz = round9(scene.camera.position.z + meters * h.z);
  if (!scene.room.contains(nx, nz)) return ActionBlocked{ActionBlocked::Reason::LeavesRoom};
  for (const auto& obj : scene.objects) {
    if (obj.footprint().contains(nx, nz)) return ActionBlocked{ActionBlocked::Reason::Overlap};
  }
  Scene next = scene;
  next.camera.position.x = nx;
  next.camera.position.z = nz;
  return next;
}

ApplyResult place_object(const Scene& scene, const PlaceObjectAt& act) {
  const int idx = scene.index_of(act.instance_id);
  if (idx < 0) return ActionBlocked{ActionBlocked::Reason::UnknownObject};
  ObjectInstance moved = scene.objects[static_cast<size_t>(idx)];
  moved.position.x = round9(act.target.x);
  moved.position.z = round9(act.target.z);
  moved.position.y = scene.room.floor_y;
  const Footprint fp = moved.footprint();
  if (fp.min_x < 0.0 || fp.min_z < 0.0 || fp.max_x > scene.room.width ||
      fp.max_z > scene.room.depth) {
    return ActionBlocked{ActionBlocked::Reason::LeavesRoom};
  }
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    if (static_cast<int>(i) == idx) continue;
    if (fp.overlaps(scene.objects[i].footprint())) {
      return ActionBlocked{ActionBlocked::Reason::Overlap};
    }
  }
  if (fp.contains(scene.camera.position.x, scene.camera.position.z)) {
    return ActionBlocked{ActionBlocked::Reason::Overlap};
  }
  Scene next = scene;
  next.objects[static_cast<size_t>(idx)] = moved;
  return next;
}

ApplyResult teleport(const Scene& scene, const TeleportTo& act) {
  if (!scene.navigable(act.target.x, act.target.z)) {
    return ActionBlocked{ActionBlocked::Reason::NotNavigable};
  }
  Scene next = scene;
  next.camera.position = act.target;
  next.camera.yaw = wrap_degrees(act.yaw);
  return next;
}

}  // namespace

ApplyResult apply_action(const Scene& scene, const Action& action) {
  return std::visit(
      [&](const auto& a) -> ApplyResult {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, RotateLeft>) return rotate(scene, -a.degrees);
        else if constexpr (std::is_same_v<T, RotateRight>) return rotate(scene, a.degrees);
        else if constexpr (std::is_same_v<T, MoveAhead>) return move_ahead(scene, a.meters);
        else if constexpr (std::is_same_v<T, PlaceObjectAt>) return place_object(scene, a);
        else return teleport(scene, a);
      },
      action);
}

ActionTrace sample_ego_trace(const Scene& scene, Rng& rng, const SimParams& params) {
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const bool turn_right = rng.bernoulli(0.5);
    const double angle = rng.choice(params.rotate_angles);
    const bool forward = rng.bernoulli(params.forward_prob);

    ActionTrace trace;
    trace.pre_state = scene;
    Action first = turn_right ? Action{RotateRight{angle}} : Action{RotateLeft{angle}};
    trace.actions.push_back(first);
    Scene state = std::get<Scene>(apply_action(scene, first));  // rotations never block

    if (forward) {
      const double dist = round9(rng.uniform(params.forward_min, params.forward_max));
      const Action step = MoveAhead{dist};
      ApplyResult res = apply_action(state, step);
      if (std::holds_alternative<ActionBlocked>(res)) {
        if (!params.degrade_blocked_move) continue;  // resample the whole trace
        // degrade: keep the rotation-only trace
      } else {
        trace.actions.push_back(step);
        state = std::get<Scene>(std::move(res));
      }
    }
    trace.post_state = std::move(state);
    return trace;
  }
  throw TraceFailure("sample_ego_trace: no legal trace in " + std::to_string(params.max_attempts) +
                     " attempts");
}

ObjectMove sample_object_move(const Scene& scene, Rng& rng, const SimParams& params,
                              double min_visible_px) {
  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  const double min_area =
      params.min_bbox_frac * scene.intrinsics.width * scene.intrinsics.height;
  std::vector<size_t> candidates;
  for (const auto& v : vis) {
    if (v.bbox.area() >= min_area) candidates.push_back(v.index);
  }
  if (candidates.empty()) {
    throw NoMovableObject("sample_object_move: no visible object above bbox threshold");
  }
  const size_t idx = candidates[static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(candidates.size()) - 1))];
  const ObjectInstance& obj = scene.objects[idx];

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const double dist = round9(rng.uniform(params.object_move_min, params.object_move_max));
    const double dir = round9(rng.uniform(0.0, 360.0));
    const Vec3 h = heading(dir);
    const Vec3 target{round9(obj.position.x + dist * h.x), scene.room.floor_y,
                      round9(obj.position.z + dist * h.z)};
    const PlaceObjectAt act{obj.instance_id, target};
    ApplyResult res = apply_action(scene, Action{act});
    if (std::holds_alternative<ActionBlocked>(res)) continue;
    Scene post = std::get<Scene>(std::move(res));
    // The moved object must stay in the frame of view.
    bool still_visible = false;
    for (const auto& v : visible_objects(post, post.camera, post.intrinsics, min_visible_px)) {
      if (v.index == idx) {
        still_visible = true;
        break;
      }
    }
    if (!still_visible) continue;
    return {obj.instance_id, Action{act}, std::move(post), dist, dir};
  }
  throw NoMovableObject("sample_object_move: no legal move for " + obj.instance_id);
}

MarkTeleport teleport_to_mark_turning(const Scene& scene, Rng& rng, const SimParams& params,
                                      bool turn_right) {
  const Intrinsics& K = scene.intrinsics;
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    Pixel mark;
    mark.u = round9(rng.uniform(params.mark_window_lo * K.width, params.mark_window_hi * K.width));
    mark.v = round9(rng.uniform(params.mark_window_lo * K.height, params.mark_window_hi * K.height));
    const auto hit = raycast_to_floor(mark, scene.camera, K, scene.room.floor_y);
    if (!hit) continue;  // ray at or above horizontal: try another point
    if (!scene.navigable(hit->x, hit->z)) continue;  // wall or furniture
    TeleportTo act;
    act.target = {round9(hit->x), scene.camera.position.y, round9(hit->z)};
    act.yaw = wrap_degrees(scene.camera.yaw + (turn_right ? 90.0 : -90.0));
    ApplyResult res = apply_action(scene, Action{act});
    if (std::holds_alternative<ActionBlocked>(res)) continue;
    return {mark, act, std::get<Scene>(std::move(res)), turn_right};
  }
  throw NoNavigablePoint("teleport_to_mark: no navigable mark in " +
                         std::to_string(params.max_attempts) + " attempts");
}

MarkTeleport teleport_to_mark(const Scene& scene, Rng& rng, const SimParams& params) {
  const bool turn_right = rng.bernoulli(0.5);
  return teleport_to_mark_turning(scene, rng, params, turn_right);
}

}  // namespace spatialqa
