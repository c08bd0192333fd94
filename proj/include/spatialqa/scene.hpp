#pragma once

// Procedural scene model: a rectangular room, placed object instances, and
// the max-visibility camera placement rule. Scenes are plain values; every
// operation that consumes one leaves it untouched.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spatialqa/catalog.hpp"
#include "spatialqa/geometry.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

struct Room {
  double width{6.0};   // x extent, [0, width]
  double depth{6.0};   // z extent, [0, depth]
  double floor_y{0.0};

  bool contains(double x, double z) const {
    return x >= 0.0 && x <= width && z >= 0.0 && z <= depth;
  }
};

/// Axis-aligned footprint rectangle on the floor.
struct Footprint {
  double min_x{0.0}, min_z{0.0}, max_x{0.0}, max_z{0.0};

  bool overlaps(const Footprint& o, double gap = 0.0) const {
    return min_x < o.max_x + gap && o.min_x < max_x + gap &&
           min_z < o.max_z + gap && o.min_z < max_z + gap;
  }
  bool contains(double x, double z) const {
    return x >= min_x && x <= max_x && z >= min_z && z <= max_z;
  }
};

struct ObjectInstance {
  std::string instance_id;
  std::string class_name;
  std::string chosen_phrase;
  bool countable{true};
  Vec3 position;       // footprint center; y is the base height (floor)
  double yaw{0.0};     // degrees, one of {0, 90, 180, 270}
  double footprint_w{0.5};
  double footprint_d{0.5};
  double height{0.5};

  /// Effective x/z extents after yaw (multiples of 90 swap the axes).
  std::pair<double, double> extents() const;
  Footprint footprint() const;
  /// Box center; the reference point for relations, distances and aiming.
  Vec3 center() const { return {position.x, position.y + height / 2.0, position.z}; }
  std::array<Vec3, 8> box_corners() const;
};

struct Scene {
  std::string scene_id;
  uint64_t seed{0};
  Room room;
  std::vector<ObjectInstance> objects;
  CameraPose camera;
  Intrinsics intrinsics;

  int index_of(const std::string& instance_id) const;  // -1 when absent
  /// A floor point an agent could stand on: inside the room and outside
  /// every object footprint.
  bool navigable(double x, double z) const;
};

struct GenParams {
  double room_min_w{4.5}, room_max_w{8.0};
  double room_min_d{4.5}, room_max_d{8.0};
  int min_objects{7};
  int max_objects{13};
  double cluster_prob{0.35};   // chance a placement spawns same-class extras
  int cluster_extra_max{3};
  double placement_gap{0.05};  // required clearance between footprints
  double camera_height{1.5};
  int camera_candidates{20};
  int min_visible{3};
  double min_visible_px_frac{0.0025};  // of image area
  int max_attempts{20};
  Intrinsics intrinsics{};

  double min_visible_px() const {
    return min_visible_px_frac * intrinsics.width * intrinsics.height;
  }
};

/// Pixel-space axis-aligned box.
struct BBox {
  double min_u{0.0}, min_v{0.0}, max_u{0.0}, max_v{0.0};
  double area() const { return (max_u - min_u) * (max_v - min_v); }
};

struct Visibility {
  size_t index;  // into Scene::objects
  BBox bbox;     // clipped to the image
};

/// Projected, image-clipped bounding box of a schematic object box, or empty
/// when the object cannot count as visible (center behind/off image, corners
/// behind the camera).
std::optional<BBox> project_object_bbox(const ObjectInstance& obj, const CameraPose& cam,
                                        const Intrinsics& K);

/// Frustum-and-size visibility: projected footprint center inside the image,
/// center depth > 0.1 m, and clipped bbox area >= min_area_px. No occlusion.
std::vector<Visibility> visible_objects(const Scene& scene, const CameraPose& cam,
                                        const Intrinsics& K, double min_area_px);

/// Number of visible instances of a class.
int count_instances(const Scene& scene, const CameraPose& cam, const Intrinsics& K,
                    const std::string& class_name, double min_area_px);

/// The 20-candidate placement rule: uniform positions at fixed height with
/// random yaw; the candidate seeing the most objects wins, earliest index on
/// ties. Candidates standing inside furniture are invalid. Throws
/// NoValidCamera when the best candidate sees fewer than min_visible.
CameraPose place_camera(const Scene& draft, Rng& rng, const GenParams& params);

/// Exposed so tests can replay the exact candidate sequence place_camera
/// consumed and verify the argmax independently.
std::vector<CameraPose> sample_camera_candidates(const Scene& draft, Rng& rng,
                                                 const GenParams& params);

/// Deterministic scene synthesis: room dimensions, rejection-sampled object
/// placement, then place_camera. Throws PlacementFailure / NoValidCamera.
Scene generate_scene(uint64_t seed, const Catalog& catalog, const GenParams& params);

}  // namespace spatialqa
