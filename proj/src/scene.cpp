#include "spatialqa/scene.hpp"

#include <algorithm>

#include "spatialqa/errors.hpp"

namespace spatialqa {

std::pair<double, double> ObjectInstance::extents() const {
  const int q = static_cast<int>(std::llround(wrap_degrees(yaw))) % 180;
  if (q == 90) return {footprint_d, footprint_w};
  return {footprint_w, footprint_d};
}

Footprint ObjectInstance::footprint() const {
  auto [ex, ez] = extents();
  return {position.x - ex / 2.0, position.z - ez / 2.0,
          position.x + ex / 2.0, position.z + ez / 2.0};
}

std::array<Vec3, 8> ObjectInstance::box_corners() const {
  const Footprint f = footprint();
  const double y0 = position.y;
  const double y1 = position.y + height;
  return {Vec3{f.min_x, y0, f.min_z}, Vec3{f.max_x, y0, f.min_z},
          Vec3{f.max_x, y0, f.max_z}, Vec3{f.min_x, y0, f.max_z},
          Vec3{f.min_x, y1, f.min_z}, Vec3{f.max_x, y1, f.min_z},
          Vec3{f.max_x, y1, f.max_z}, Vec3{f.min_x, y1, f.max_z}};
}

int Scene::index_of(const std::string& instance_id) const {
  for (size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].instance_id == instance_id) return static_cast<int>(i);
  }
  return -1;
}

bool Scene::navigable(double x, double z) const {
  if (!room.contains(x, z)) return false;
  for (const auto& obj : objects) {
    if (obj.footprint().contains(x, z)) return false;
  }
  return true;
}

std::optional<BBox> project_object_bbox(const ObjectInstance& obj, const CameraPose& cam,
                                        const Intrinsics& K) {
  // All corners must be safely in front of the camera; objects straddling
  // the camera plane do not get a meaningful schematic bbox.
  BBox box{1e18, 1e18, -1e18, -1e18};
  for (const Vec3& corner : obj.box_corners()) {
    const CamFramePoint c = normalize_to_camera(corner, cam);
    if (c.z_prime <= 0.01) return std::nullopt;
    const double u = K.cx() + K.fx() * c.x_prime / c.z_prime;
    const double v = K.cy() - K.fy() * (c.y - cam.position.y) / c.z_prime;
    box.min_u = std::min(box.min_u, u);
    box.min_v = std::min(box.min_v, v);
    box.max_u = std::max(box.max_u, u);
    box.max_v = std::max(box.max_v, v);
  }
  // Clip to the image.
  box.min_u = std::max(box.min_u, 0.0);
  box.min_v = std::max(box.min_v, 0.0);
  box.max_u = std::min(box.max_u, static_cast<double>(K.width));
  box.max_v = std::min(box.max_v, static_cast<double>(K.height));
  if (box.min_u >= box.max_u || box.min_v >= box.max_v) return std::nullopt;
  return box;
}

std::vector<Visibility> visible_objects(const Scene& scene, const CameraPose& cam,
                                        const Intrinsics& K, double min_area_px) {
  std::vector<Visibility> out;
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    const ObjectInstance& obj = scene.objects[i];
    const CamFramePoint c = normalize_to_camera(obj.position, cam);
    if (c.z_prime <= 0.1) continue;
    const auto px = project_to_image(obj.position, cam, K);
    if (!px) continue;
    if (px->u < 0.0 || px->u > K.width || px->v < 0.0 || px->v > K.height) continue;
    const auto bbox = project_object_bbox(obj, cam, K);
    if (!bbox || bbox->area() < min_area_px) continue;
    out.push_back({i, *bbox});
  }
  return out;
}

int count_instances(const Scene& scene, const CameraPose& cam, const Intrinsics& K,
                    const std::string& class_name, double min_area_px) {
  int n = 0;
  for (const Visibility& v : visible_objects(scene, cam, K, min_area_px)) {
    if (scene.objects[v.index].class_name == class_name) ++n;
  }
  return n;
}

std::vector<CameraPose> sample_camera_candidates(const Scene& draft, Rng& rng,
                                                 const GenParams& params) {
  std::vector<CameraPose> candidates;
  candidates.reserve(params.camera_candidates);
  for (int i = 0; i < params.camera_candidates; ++i) {
    CameraPose pose;
    pose.position.x = round9(rng.uniform(0.0, draft.room.width));
    pose.position.z = round9(rng.uniform(0.0, draft.room.depth));
    pose.position.y = params.camera_height;
    pose.yaw = round9(rng.uniform(0.0, 360.0));
    candidates.push_back(pose);
  }
  return candidates;
}

CameraPose place_camera(const Scene& draft, Rng& rng, const GenParams& params) {
  const auto candidates = sample_camera_candidates(draft, rng, params);
  const double min_px = params.min_visible_px();
  int best = -1;
  int best_count = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const CameraPose& cand = candidates[i];
    int count = -1;
    if (draft.navigable(cand.position.x, cand.position.z)) {
      count = static_cast<int>(
          visible_objects(draft, cand, params.intrinsics, min_px).size());
    }
    if (count > best_count) {  // strict: ties keep the earlier candidate
      best_count = count;
      best = static_cast<int>(i);
    }
  }
  if (best < 0 || best_count < params.min_visible) {
    throw NoValidCamera("place_camera: best candidate sees " + std::to_string(best_count) +
                        " objects, need " + std::to_string(params.min_visible));
  }
  return candidates[best];
}

namespace {

bool try_place(Scene& draft, const AssetClass& cls, Rng& rng, const GenParams& params) {
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    ObjectInstance obj;
    obj.class_name = cls.class_name;
    obj.chosen_phrase = cls.attribute_phrases[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(cls.attribute_phrases.size()) - 1))];
    obj.countable = cls.countable;
    obj.footprint_w = cls.footprint_w;
    obj.footprint_d = cls.footprint_d;
    obj.height = cls.height;
    obj.yaw = static_cast<double>(rng.uniform_int(0, 3)) * 90.0;
    auto [ex, ez] = obj.extents();
    if (ex >= draft.room.width || ez >= draft.room.depth) return false;
    obj.position.x = round9(rng.uniform(ex / 2.0, draft.room.width - ex / 2.0));
    obj.position.z = round9(rng.uniform(ez / 2.0, draft.room.depth - ez / 2.0));
    obj.position.y = draft.room.floor_y;
    const Footprint fp = obj.footprint();
    bool collides = false;
    for (const auto& other : draft.objects) {
      if (fp.overlaps(other.footprint(), params.placement_gap)) {
        collides = true;
        break;
      }
    }
    if (collides) continue;
    char id[8];
    std::snprintf(id, sizeof(id), "o%02zu", draft.objects.size());
    obj.instance_id = id;
    draft.objects.push_back(std::move(obj));
    return true;
  }
  return false;
}

}  // namespace

Scene generate_scene(uint64_t seed, const Catalog& catalog, const GenParams& params) {
  if (catalog.empty()) throw PlacementFailure("generate_scene: empty catalog");
  Rng rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.intrinsics = params.intrinsics;
  scene.room.width = round9(rng.uniform(params.room_min_w, params.room_max_w));
  scene.room.depth = round9(rng.uniform(params.room_min_d, params.room_max_d));
  scene.room.floor_y = 0.0;

  const int target = static_cast<int>(rng.uniform_int(params.min_objects, params.max_objects));
  int failures = 0;
  while (static_cast<int>(scene.objects.size()) < target && failures < 3) {
    const AssetClass& cls = rng.choice(catalog);
    int want = 1;
    if (rng.bernoulli(params.cluster_prob)) {
      want += static_cast<int>(rng.uniform_int(1, params.cluster_extra_max));
    }
    want = std::min(want, target - static_cast<int>(scene.objects.size()));
    for (int k = 0; k < want; ++k) {
      if (!try_place(scene, cls, rng, params)) {
        ++failures;
        break;
      }
      failures = 0;
    }
  }
  if (static_cast<int>(scene.objects.size()) < params.min_objects) {
    throw PlacementFailure("generate_scene: placed " + std::to_string(scene.objects.size()) +
                           " of " + std::to_string(params.min_objects) + " required objects");
  }
  scene.camera = place_camera(scene, rng, params);
  return scene;
}

}  // namespace spatialqa
