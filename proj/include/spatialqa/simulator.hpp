#pragma once

// The embodied action layer. Actions are applied functionally: apply_action()
// returns a fresh scene state or a block reason, and samplers rejection-loop
// until they produce a legal episode.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spatialqa/scene.hpp"

namespace spatialqa {

struct RotateLeft {
  double degrees;
};
struct RotateRight {
  double degrees;
};
struct MoveAhead {
  double meters;
};
struct PlaceObjectAt {
  std::string instance_id;
  Vec3 target;
};
struct TeleportTo {
  Vec3 target;
  double yaw;
};

using Action = std::variant<RotateLeft, RotateRight, MoveAhead, PlaceObjectAt, TeleportTo>;

struct ActionBlocked {
  enum class Reason { LeavesRoom, Overlap, NotNavigable, UnknownObject };
  Reason reason;
};

using ApplyResult = std::variant<Scene, ActionBlocked>;

/// Applies one action. Rotations adjust yaw mod 360 (right = clockwise =
/// increasing yaw); translations and placements are blocked rather than
/// clamped when they would leave the room or intersect a footprint.
ApplyResult apply_action(const Scene& scene, const Action& action);

struct ActionTrace {
  std::vector<Action> actions;  // at most two for egocentric traces
  Scene pre_state;
  Scene post_state;
};

/// One captured instant: a full scene snapshot plus an optional mark pixel
/// for perspective episodes.
struct Frame {
  std::string frame_id;
  Scene state;
  std::optional<Pixel> mark;
};

struct SimParams {
  std::vector<double> rotate_angles{20.0, 30.0, 40.0, 50.0, 60.0};
  double forward_prob{0.5};
  double forward_min{0.20}, forward_max{0.40};     // meters
  double object_move_min{0.25}, object_move_max{0.50};  // meters
  double mark_window_lo{0.2}, mark_window_hi{0.8};  // normalized image coords
  double min_bbox_frac{0.01};  // of image area, movable-object threshold
  int max_attempts{20};
  // When a sampled forward step is blocked the whole trace is resampled;
  // set true to degrade to the rotation-only trace instead.
  bool degrade_blocked_move{false};
};

/// Rotation of 20/30/40/50/60 degrees left or right, then a forward step of
/// 0.20-0.40 m with probability 0.5. Blocked episodes are resampled up to
/// max_attempts; throws TraceFailure after that.
ActionTrace sample_ego_trace(const Scene& scene, Rng& rng, const SimParams& params);

struct ObjectMove {
  std::string instance_id;
  Action action;  // the PlaceObjectAt actually applied
  Scene post_state;
  double distance;       // meters, in [0.25, 0.50]
  double direction_deg;  // floor-plane direction the object moved
};

/// Moves one salient visible object by 0.25-0.50 m in a random floor
/// direction, keeping it visible. Throws NoMovableObject when no candidate
/// exists or no legal move is found.
ObjectMove sample_object_move(const Scene& scene, Rng& rng, const SimParams& params,
                              double min_visible_px);

struct MarkTeleport {
  Pixel mark;          // the "X" pixel in the original view
  TeleportTo action;   // teleport applied to reach the mark
  Scene post_state;    // camera at the mark, turned +-90 degrees
  bool turned_right;
};

/// Samples a mark pixel in the central 0.2-0.8 image window, raycasts to the
/// floor, and teleports there keeping the original heading turned 90 degrees
/// left or right. Throws NoNavigablePoint after max_attempts.
MarkTeleport teleport_to_mark(const Scene& scene, Rng& rng, const SimParams& params);

/// Same as teleport_to_mark but with the turn direction imposed; used to
/// regenerate an episode with the opposite turn.
MarkTeleport teleport_to_mark_turning(const Scene& scene, Rng& rng, const SimParams& params,
                                      bool turn_right);

}  // namespace spatialqa
