#include "spatialqa/qagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "spatialqa/errors.hpp"

namespace spatialqa {

namespace {

using json = nlohmann::ordered_json;

const std::vector<double> kEgoAngles{20.0, 30.0, 40.0, 50.0, 60.0};

json vec_json(const Vec3& v) {
  return json{{"x", round9(v.x)}, {"y", round9(v.y)}, {"z", round9(v.z)}};
}

Vec3 vec_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
}

json cam_json(const CameraPose& c) {
  return json{{"x", round9(c.position.x)}, {"y", round9(c.position.y)},
              {"z", round9(c.position.z)}, {"yaw", c.yaw}};
}

CameraPose cam_from(const json& j) {
  CameraPose c;
  c.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
  c.yaw = j.at("yaw").get<double>();
  return c;
}

std::string format_degrees(double deg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", deg);
  return buf;
}

/// Indices of visible objects that can be mentioned without ambiguity,
/// paired with their mention text, in visibility order.
std::vector<std::pair<size_t, std::string>> mentionable_objects(
    const Scene& scene, const std::vector<Visibility>& vis) {
  std::vector<std::pair<size_t, std::string>> out;
  for (const auto& v : vis) {
    if (auto m = unambiguous_mention(scene, vis, v.index)) {
      out.emplace_back(v.index, *m);
    }
  }
  return out;
}

std::string aim_option(AimClass cls, double bucket) {
  switch (cls) {
    case AimClass::TurnLeft: return "turn left about " + format_degrees(bucket) + " degrees";
    case AimClass::TurnRight: return "turn right about " + format_degrees(bucket) + " degrees";
    default: return "roughly straight ahead";
  }
}

/// Replays a (rotate, optional forward) pair with the same arithmetic
/// apply_action() uses, so recomputation is bit-identical to the simulator.
CameraPose replay_ego(const CameraPose& cam, bool turn_right, double degrees, bool forward,
                      double distance) {
  CameraPose out = cam;
  out.yaw = wrap_degrees(cam.yaw + (turn_right ? degrees : -degrees));
  if (forward) {
    const double a = deg2rad(out.yaw);
    out.position.x = round9(out.position.x + distance * std::sin(a));
    out.position.z = round9(out.position.z + distance * std::cos(a));
  }
  return out;
}

std::string obj_move_text(const std::string& mention, const std::string& how) {
  return mention + " moved " + how;
}

}  // namespace

const char* task_name(TaskType t) {
  switch (t) {
    case TaskType::RelSpatial: return "rel_spatial";
    case TaskType::RelDepth: return "rel_depth";
    case TaskType::Count: return "count";
    case TaskType::EgoMove: return "ego_move";
    case TaskType::ObjMove: return "obj_move";
    case TaskType::Perspective: return "perspective";
    case TaskType::GoalAim: return "goal_aim";
    case TaskType::ActionConsequence: return "action_consequence";
    case TaskType::Precise3D: return "precise3d";
  }
  return "unknown";
}

const char* task_short_name(TaskType t) {
  switch (t) {
    case TaskType::RelSpatial: return "RelSp";
    case TaskType::RelDepth: return "RelDep";
    case TaskType::Count: return "Count";
    case TaskType::EgoMove: return "EgoM";
    case TaskType::ObjMove: return "ObjM";
    case TaskType::Perspective: return "Pers";
    case TaskType::GoalAim: return "Aim";
    case TaskType::ActionConsequence: return "EgoAct";
    case TaskType::Precise3D: return "Prec3D";
  }
  return "?";
}

std::optional<TaskType> parse_task(const std::string& name) {
  for (int i = 0; i < kTaskCount; ++i) {
    const TaskType t = static_cast<TaskType>(i);
    if (name == task_name(t)) return t;
  }
  return std::nullopt;
}

bool is_dynamic_task(TaskType t) {
  return t == TaskType::EgoMove || t == TaskType::ObjMove || t == TaskType::Perspective ||
         t == TaskType::GoalAim || t == TaskType::ActionConsequence;
}

std::optional<std::string> unambiguous_mention(const Scene& scene,
                                               const std::vector<Visibility>& visible,
                                               size_t object_index) {
  bool in_visible = false;
  int class_count = 0;
  int phrase_count = 0;
  const ObjectInstance& target = scene.objects[object_index];
  for (const auto& v : visible) {
    const ObjectInstance& other = scene.objects[v.index];
    if (v.index == object_index) in_visible = true;
    if (other.class_name == target.class_name) ++class_count;
    if (other.chosen_phrase == target.chosen_phrase) ++phrase_count;
  }
  if (!in_visible) return std::nullopt;
  if (class_count == 1 || phrase_count == 1) return "the " + target.chosen_phrase;
  return std::nullopt;
}

std::string describe_trace_past(bool turned_right, double degrees, bool moved_forward) {
  std::string s = std::string("rotated ") + (turned_right ? "right" : "left") + " by " +
                  format_degrees(degrees) + " degrees";
  if (moved_forward) s += " and moved forward";
  return s;
}

std::string describe_trace_present(bool turned_right, double degrees, bool moved_forward) {
  std::string s = std::string("rotate ") + (turned_right ? "right" : "left") + " by " +
                  format_degrees(degrees) + " degrees";
  if (moved_forward) s += " and move forward";
  return s;
}

std::string format_triple(double x, double y, double z) {
  auto clean = [](double v) { return std::fabs(v) < 0.005 ? 0.0 : v; };
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(%.2f, %.2f, %.2f)", clean(x), clean(y), clean(z));
  return buf;
}

std::optional<Vec3> parse_triple(const std::string& text) {
  Vec3 v;
  if (std::sscanf(text.c_str(), "(%lf, %lf, %lf)", &v.x, &v.y, &v.z) == 3) return v;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// static families
// ---------------------------------------------------------------------------

std::vector<QADraft> gen_rel_spatial(const Scene& scene, Rng& rng, const QAGenParams& params,
                                     int max_lateral, int max_vertical, int max_closer_of_two,
                                     double min_visible_px) {
  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  if (vis.size() < 2) throw InsufficientObjects("gen_rel_spatial: fewer than 2 visible objects");
  auto mentionable = mentionable_objects(scene, vis);
  std::vector<QADraft> out;
  if (mentionable.size() < 2) return out;

  std::set<std::pair<size_t, size_t>> used_lateral, used_vertical;
  auto pick = [&](size_t exclude_a, size_t exclude_b) {
    size_t i;
    do {
      i = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(mentionable.size()) - 1));
    } while (i == exclude_a || i == exclude_b);
    return i;
  };
  const size_t none = static_cast<size_t>(-1);

  // Form 1a: left/right.
  for (int attempt = 0; attempt < max_lateral * 8 && static_cast<int>(out.size()) < max_lateral;
       ++attempt) {
    const size_t ia = pick(none, none);
    const size_t ib = pick(ia, none);
    const auto key = std::minmax(mentionable[ia].first, mentionable[ib].first);
    if (used_lateral.count(key)) continue;
    const ObjectInstance& a = scene.objects[mentionable[ia].first];
    const ObjectInstance& b = scene.objects[mentionable[ib].first];
    const auto ca = normalize_to_camera(a.center(), scene.camera);
    const auto cb = normalize_to_camera(b.center(), scene.camera);
    const auto rel = lateral_relation(ca, cb, params.tie_eps);
    if (rel == LateralRelation::Tie) continue;
    used_lateral.insert(key);
    QADraft d;
    d.task = TaskType::RelSpatial;
    d.question = "Is " + mentionable[ia].second + " to the left or right of " +
                 mentionable[ib].second + "?";
    d.gold = rel == LateralRelation::Left ? "left" : "right";
    d.distractors = {rel == LateralRelation::Left ? "right" : "left"};
    d.answer_class = d.gold;
    d.derivation = json{{"kind", "lateral"},
                        {"cam", cam_json(scene.camera)},
                        {"a", vec_json(a.center())},
                        {"b", vec_json(b.center())},
                        {"tie_eps", params.tie_eps}};
    out.push_back(std::move(d));
  }

  // Form 1b: above/below on world height (interpretation: box centers with a
  // minimum gap; the static family only defines left/right precisely).
  int emitted_vertical = 0;
  for (int attempt = 0; attempt < max_vertical * 8 && emitted_vertical < max_vertical; ++attempt) {
    const size_t ia = pick(none, none);
    const size_t ib = pick(ia, none);
    const auto key = std::minmax(mentionable[ia].first, mentionable[ib].first);
    if (used_vertical.count(key)) continue;
    const ObjectInstance& a = scene.objects[mentionable[ia].first];
    const ObjectInstance& b = scene.objects[mentionable[ib].first];
    const double ya = round9(a.center().y);
    const double yb = round9(b.center().y);
    if (std::fabs(ya - yb) < params.vertical_gap) continue;
    used_vertical.insert(key);
    QADraft d;
    d.task = TaskType::RelSpatial;
    d.question = "Is " + mentionable[ia].second + " above or below " + mentionable[ib].second + "?";
    d.gold = ya > yb ? "above" : "below";
    d.distractors = {ya > yb ? "below" : "above"};
    d.answer_class = d.gold;
    d.derivation = json{{"kind", "vertical"},
                        {"a_y", ya},
                        {"b_y", yb},
                        {"min_gap", params.vertical_gap}};
    out.push_back(std::move(d));
    ++emitted_vertical;
  }

  // Form 2: which of two objects is closer to a third.
  if (mentionable.size() >= 3) {
    int emitted = 0;
    for (int attempt = 0; attempt < max_closer_of_two * 8 && emitted < max_closer_of_two;
         ++attempt) {
      const size_t ic = pick(none, none);
      const size_t ia = pick(ic, none);
      const size_t ib = pick(ic, ia);
      const ObjectInstance& ref = scene.objects[mentionable[ic].first];
      const ObjectInstance& a = scene.objects[mentionable[ia].first];
      const ObjectInstance& b = scene.objects[mentionable[ib].first];
      const double da = pairwise_distance(a.center(), ref.center());
      const double db = pairwise_distance(b.center(), ref.center());
      if (std::fabs(da - db) <= params.tie_eps) continue;
      QADraft d;
      d.task = TaskType::RelSpatial;
      d.question = "Which object is closer to " + mentionable[ic].second + " - " +
                   mentionable[ia].second + ", or " + mentionable[ib].second + "?";
      const bool a_closer = da < db;
      d.gold = a_closer ? mentionable[ia].second : mentionable[ib].second;
      d.distractors = {a_closer ? mentionable[ib].second : mentionable[ia].second};
      d.answer_class = a_closer ? "first" : "second";
      d.derivation = json{{"kind", "closer_of_two"},
                          {"ref", vec_json(ref.center())},
                          {"a", vec_json(a.center())},
                          {"b", vec_json(b.center())},
                          {"a_text", mentionable[ia].second},
                          {"b_text", mentionable[ib].second},
                          {"tie_eps", params.tie_eps}};
      out.push_back(std::move(d));
      ++emitted;
    }
  }
  return out;
}

std::vector<QADraft> gen_rel_depth(const Scene& scene, Rng& rng, const QAGenParams& params,
                                   int max_n, double min_visible_px) {
  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  if (vis.size() < 2) throw InsufficientObjects("gen_rel_depth: fewer than 2 visible objects");
  auto mentionable = mentionable_objects(scene, vis);
  std::vector<QADraft> out;
  if (mentionable.size() < 2) return out;
  std::set<std::pair<size_t, size_t>> used;
  for (int attempt = 0; attempt < max_n * 8 && static_cast<int>(out.size()) < max_n; ++attempt) {
    const size_t ia =
        static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(mentionable.size()) - 1));
    size_t ib;
    do {
      ib = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(mentionable.size()) - 1));
    } while (ib == ia);
    if (used.count({mentionable[ia].first, mentionable[ib].first})) continue;
    const ObjectInstance& a = scene.objects[mentionable[ia].first];
    const ObjectInstance& b = scene.objects[mentionable[ib].first];
    const double da = pairwise_distance(a.center(), scene.camera.position);
    const double db = pairwise_distance(b.center(), scene.camera.position);
    if (std::fabs(da - db) <= params.tie_eps) continue;
    used.insert({mentionable[ia].first, mentionable[ib].first});
    QADraft d;
    d.task = TaskType::RelDepth;
    d.question = "Is " + mentionable[ia].second + " closer to the camera than " +
                 mentionable[ib].second + "?";
    d.gold = da < db ? "yes" : "no";
    d.distractors = {da < db ? "no" : "yes"};
    d.answer_class = d.gold;
    d.derivation = json{{"kind", "rel_depth"},
                        {"cam_pos", vec_json(scene.camera.position)},
                        {"a", vec_json(a.center())},
                        {"b", vec_json(b.center())},
                        {"tie_eps", params.tie_eps}};
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<QADraft> gen_count(const Scene& scene, Rng& rng, const QAGenParams& params, int max_n,
                               double min_visible_px) {
  (void)params;
  std::vector<std::string> classes;
  for (const auto& obj : scene.objects) {
    if (!obj.countable) continue;
    if (std::find(classes.begin(), classes.end(), obj.class_name) == classes.end()) {
      classes.push_back(obj.class_name);
    }
  }
  rng.shuffle(classes);
  std::vector<QADraft> out;
  int zero_golds = 0;
  for (const auto& cls : classes) {
    if (static_cast<int>(out.size()) >= max_n) break;
    const int gold = count_instances(scene, scene.camera, scene.intrinsics, cls, min_visible_px);
    if (gold == 0 && zero_golds >= 1) continue;  // at most one zero-count question per scene
    if (gold == 0) ++zero_golds;

    std::vector<int> candidates;
    for (int delta : {-2, -1, 1, 2, 3}) {
      if (gold + delta >= 0) candidates.push_back(gold + delta);
    }
    rng.shuffle(candidates);
    candidates.resize(3);

    QADraft d;
    d.task = TaskType::Count;
    d.question = "How many " + pluralize(cls) + " are visible in the image?";
    d.gold = std::to_string(gold);
    for (int c : candidates) d.distractors.push_back(std::to_string(c));
    d.answer_class = d.gold;
    json boxes = json::array();
    for (const auto& obj : scene.objects) {
      if (obj.class_name != cls) continue;
      boxes.push_back(json{{"x", round9(obj.position.x)},
                           {"y", round9(obj.position.y)},
                           {"z", round9(obj.position.z)},
                           {"yaw", obj.yaw},
                           {"w", obj.footprint_w},
                           {"d", obj.footprint_d},
                           {"h", obj.height}});
    }
    d.derivation = json{{"kind", "count"},
                        {"class_name", cls},
                        {"cam", cam_json(scene.camera)},
                        {"horizontal_fov", scene.intrinsics.horizontal_fov},
                        {"width", scene.intrinsics.width},
                        {"height", scene.intrinsics.height},
                        {"min_area_px", min_visible_px},
                        {"boxes", boxes}};
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// dynamic families
// ---------------------------------------------------------------------------

namespace {

struct EgoTraceFacts {
  bool turn_right{false};
  double degrees{0.0};
  bool forward{false};
  double distance{0.0};
};

EgoTraceFacts trace_facts(const ActionTrace& trace) {
  EgoTraceFacts f;
  for (const Action& a : trace.actions) {
    if (const auto* r = std::get_if<RotateRight>(&a)) {
      f.turn_right = true;
      f.degrees = r->degrees;
    } else if (const auto* l = std::get_if<RotateLeft>(&a)) {
      f.turn_right = false;
      f.degrees = l->degrees;
    } else if (const auto* m = std::get_if<MoveAhead>(&a)) {
      f.forward = true;
      f.distance = m->meters;
    }
  }
  return f;
}

}  // namespace

QADraft gen_ego_move(const ActionTrace& trace, Rng& rng) {
  const EgoTraceFacts f = trace_facts(trace);
  QADraft d;
  d.task = TaskType::EgoMove;
  d.question = "How did the camera taking the video likely move?";
  d.gold = describe_trace_past(f.turn_right, f.degrees, f.forward);
  // Opposite turn direction, same structure.
  d.distractors.push_back(describe_trace_past(!f.turn_right, f.degrees, f.forward));
  // Same direction, different angle bucket.
  std::vector<double> other_angles;
  for (double a : kEgoAngles) {
    if (a != f.degrees) other_angles.push_back(a);
  }
  d.distractors.push_back(
      describe_trace_past(f.turn_right, rng.choice(other_angles), f.forward));
  // Structural foil: toggle the forward step.
  d.distractors.push_back(describe_trace_past(f.turn_right, f.degrees, !f.forward));
  d.answer_class = f.turn_right ? "right" : "left";
  d.derivation = json{{"kind", "ego_move"},
                      {"turn_right", f.turn_right},
                      {"degrees", f.degrees},
                      {"forward", f.forward},
                      {"distance", f.distance}};
  return d;
}

std::optional<QADraft> gen_obj_move(const Scene& pre_state, const Scene& post_state,
                                    const std::string& moved_id, Rng& rng,
                                    const QAGenParams& params, double min_visible_px) {
  (void)rng;
  const int idx = pre_state.index_of(moved_id);
  if (idx < 0) return std::nullopt;
  const auto vis_pre =
      visible_objects(pre_state, pre_state.camera, pre_state.intrinsics, min_visible_px);
  const auto mention = unambiguous_mention(pre_state, vis_pre, static_cast<size_t>(idx));
  if (!mention) return std::nullopt;

  const Vec3 pre_pos = pre_state.objects[static_cast<size_t>(idx)].center();
  const Vec3 post_pos = post_state.objects[static_cast<size_t>(idx)].center();
  const CameraPose& post_cam = post_state.camera;
  const auto c0 = normalize_to_camera(pre_pos, post_cam);
  const auto c1 = normalize_to_camera(post_pos, post_cam);
  const double dx = c1.x_prime - c0.x_prime;
  const double dz = c1.z_prime - c0.z_prime;
  const double adx = std::fabs(dx);
  const double adz = std::fabs(dz);
  if (std::max(adx, adz) <= params.tie_eps) return std::nullopt;
  if (std::max(adx, adz) < params.dominant_ratio * std::min(adx, adz)) {
    return std::nullopt;  // near-diagonal move: ambiguous
  }

  std::string how;
  if (adx > adz) {
    how = dx > 0 ? "to the right" : "to the left";
  } else {
    how = dz > 0 ? "further" : "closer";
  }
  QADraft d;
  d.task = TaskType::ObjMove;
  d.question = "Did any of the objects move from the first frame to the second frame? If so, how?";
  d.gold = obj_move_text(*mention, how);
  for (const char* alt : {"closer", "further", "to the left", "to the right"}) {
    if (how != alt) d.distractors.push_back(obj_move_text(*mention, alt));
  }
  d.answer_class = how == "to the left" ? "left" : how == "to the right" ? "right" : how;
  d.derivation = json{{"kind", "obj_move"},
                      {"mention", *mention},
                      {"pre", vec_json(pre_pos)},
                      {"post", vec_json(post_pos)},
                      {"post_cam", cam_json(post_cam)},
                      {"tie_eps", params.tie_eps},
                      {"dominant_ratio", params.dominant_ratio}};
  return d;
}

std::vector<QADraft> gen_perspective(const Scene& scene, const Pixel& mark,
                                     const Scene& post_teleport, bool turned_right, Rng& rng,
                                     const QAGenParams& params, int max_lateral, int max_depth,
                                     double min_visible_px) {
  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  auto mentionable = mentionable_objects(scene, vis);
  rng.shuffle(mentionable);
  const std::string facing = turned_right ? "right" : "left";
  std::vector<QADraft> out;

  int lateral = 0;
  int depth = 0;
  for (const auto& [idx, mention] : mentionable) {
    const Vec3 pos = scene.objects[idx].center();
    if (lateral < max_lateral) {
      const auto c = normalize_to_camera(pos, post_teleport.camera);
      if (std::fabs(c.x_prime) > params.tie_eps) {
        QADraft d;
        d.task = TaskType::Perspective;
        d.question = "For someone at the mark 'X' facing " + facing +
                     " by 90 degrees, would " + mention + " be to their left or right?";
        d.gold = c.x_prime < 0 ? "left" : "right";
        d.distractors = {c.x_prime < 0 ? "right" : "left"};
        d.answer_class = d.gold;
        d.derivation = json{{"kind", "pers_lateral"},
                            {"post_cam", cam_json(post_teleport.camera)},
                            {"obj", vec_json(pos)},
                            {"tie_eps", params.tie_eps},
                            {"mark_u", round9(mark.u)},
                            {"mark_v", round9(mark.v)}};
        out.push_back(std::move(d));
        ++lateral;
        continue;
      }
    }
    if (depth < max_depth) {
      const double dm = pairwise_distance(pos, post_teleport.camera.position);
      const double dc = pairwise_distance(pos, scene.camera.position);
      if (std::fabs(dm - dc) > params.tie_eps) {
        QADraft d;
        d.task = TaskType::Perspective;
        d.question = "For someone at the mark 'X' facing " + facing + " by 90 degrees, would " +
                     mention + " be closer or further than it is from the current camera?";
        d.gold = dm < dc ? "closer" : "further";
        d.distractors = {dm < dc ? "further" : "closer"};
        d.answer_class = d.gold;
        d.derivation = json{{"kind", "pers_depth"},
                            {"mark_pos", vec_json(post_teleport.camera.position)},
                            {"cam_pos", vec_json(scene.camera.position)},
                            {"obj", vec_json(pos)},
                            {"tie_eps", params.tie_eps}};
        out.push_back(std::move(d));
        ++depth;
      }
    }
    if (lateral >= max_lateral && depth >= max_depth) break;
  }
  return out;
}

std::vector<QADraft> gen_goal_aim(const Scene& scene, Rng& rng, const QAGenParams& params,
                                  int max_n, double min_visible_px) {
  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  auto mentionable = mentionable_objects(scene, vis);
  rng.shuffle(mentionable);
  std::vector<QADraft> out;
  for (const auto& [idx, mention] : mentionable) {
    if (static_cast<int>(out.size()) >= max_n) break;
    const Vec3 pos = scene.objects[idx].center();
    const auto c = normalize_to_camera(pos, scene.camera);
    const double alpha = aiming_angle(c);
    const Aim aim = classify_aim(alpha, params.aim_eps);
    double bucket;
    if (aim.cls == AimClass::RoughlyStraight) {
      bucket = rng.choice(std::vector<double>{15.0, 30.0, 45.0});
    } else {
      bucket = std::max(15.0, std::round(aim.magnitude / 15.0) * 15.0);
    }
    QADraft d;
    d.task = TaskType::GoalAim;
    d.question = "I need to go to " + mention + ". Which direction should I turn to face it?";
    d.gold = aim_option(aim.cls, bucket);
    for (AimClass cls : {AimClass::TurnLeft, AimClass::TurnRight, AimClass::RoughlyStraight}) {
      if (cls != aim.cls) d.distractors.push_back(aim_option(cls, bucket));
    }
    d.answer_class = aim.cls == AimClass::RoughlyStraight ? "straight"
                     : aim.cls == AimClass::TurnLeft      ? "left"
                                                          : "right";
    d.derivation = json{{"kind", "goal_aim"},
                        {"cam", cam_json(scene.camera)},
                        {"obj", vec_json(pos)},
                        {"eps", params.aim_eps},
                        {"bucket", bucket}};
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<QADraft> gen_action_consequence(const Scene& scene, const ActionTrace& trace, Rng& rng,
                                            const QAGenParams& params, int max_n,
                                            double min_visible_px) {
  const EgoTraceFacts f = trace_facts(trace);
  const CameraPose& pre_cam = trace.pre_state.camera;
  const CameraPose& post_cam = trace.post_state.camera;
  const std::string act = describe_trace_present(f.turn_right, f.degrees, f.forward);

  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  auto mentionable = mentionable_objects(scene, vis);
  rng.shuffle(mentionable);
  std::vector<QADraft> out;
  for (const auto& [idx, mention] : mentionable) {
    if (static_cast<int>(out.size()) >= max_n) break;
    const Vec3 pos = scene.objects[idx].center();
    const bool distance_form = rng.bernoulli(0.5);
    QADraft d;
    d.task = TaskType::ActionConsequence;
    if (distance_form) {
      const bool ask_further = rng.bernoulli(0.5);
      const double d0 = pairwise_distance(pos, pre_cam.position);
      const double d1 = pairwise_distance(pos, post_cam.position);
      if (std::fabs(d1 - d0) <= params.tie_eps) continue;  // tie: skip this object
      const bool further = d1 > d0;
      d.question = "If I " + act + ", would I be " +
                   (ask_further ? "further from " : "closer to ") + mention + "?";
      d.gold = (further == ask_further) ? "yes" : "no";
      d.derivation = json{{"kind", "consequence"},
                          {"form", "distance"},
                          {"ask_further", ask_further},
                          {"pre_cam", cam_json(pre_cam)},
                          {"turn_right", f.turn_right},
                          {"degrees", f.degrees},
                          {"forward", f.forward},
                          {"distance", f.distance},
                          {"obj", vec_json(pos)},
                          {"tie_eps", params.tie_eps}};
    } else {
      const auto c = normalize_to_camera(pos, post_cam);
      const double alpha = aiming_angle(c);
      const bool facing = std::fabs(alpha) <= params.aim_eps;
      d.question = "If I " + act + ", would I be facing " + mention + "?";
      d.gold = facing ? "yes" : "no";
      d.derivation = json{{"kind", "consequence"},
                          {"form", "facing"},
                          {"pre_cam", cam_json(pre_cam)},
                          {"turn_right", f.turn_right},
                          {"degrees", f.degrees},
                          {"forward", f.forward},
                          {"distance", f.distance},
                          {"obj", vec_json(pos)},
                          {"eps", params.aim_eps}};
    }
    d.distractors = {d.gold == "yes" ? "no" : "yes"};
    d.answer_class = d.gold;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<QADraft> gen_precise3d(const Scene& scene, Rng& rng, const QAGenParams& params,
                                   int max_n, double min_visible_px) {
  const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_visible_px);
  auto mentionable = mentionable_objects(scene, vis);
  rng.shuffle(mentionable);
  std::vector<QADraft> out;
  char kbuf[96];
  std::snprintf(kbuf, sizeof(kbuf), "K (horizontal fov %g degrees, %dx%d pixels)",
                scene.intrinsics.horizontal_fov, scene.intrinsics.width, scene.intrinsics.height);
  for (const auto& [idx, mention] : mentionable) {
    if (static_cast<int>(out.size()) >= max_n) break;
    const Vec3 pos = scene.objects[idx].center();
    const auto c = normalize_to_camera(pos, scene.camera);
    QADraft d;
    d.task = TaskType::Precise3D;
    d.question = std::string("Imagine you are at origin looking at the positive z-axis. "
                             "Given the camera parameters, ") +
                 kbuf + ", what is the estimated 3D location of " + mention + ", in meters?";
    d.gold = format_triple(c.x_prime, c.y, c.z_prime);
    d.answer_class = "numeric";
    d.derivation = json{{"kind", "precise3d"},
                        {"cam", cam_json(scene.camera)},
                        {"obj", vec_json(pos)},
                        {"tolerance", params.precise_tolerance}};
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// derivation replay
// ---------------------------------------------------------------------------

std::string recompute_gold(TaskType task, const nlohmann::ordered_json& derivation) {
  try {
    const std::string kind = derivation.at("kind").get<std::string>();
    if (kind == "lateral") {
      const CameraPose cam = cam_from(derivation.at("cam"));
      const auto a = normalize_to_camera(vec_from(derivation.at("a")), cam);
      const auto b = normalize_to_camera(vec_from(derivation.at("b")), cam);
      const auto rel = lateral_relation(a, b, derivation.at("tie_eps").get<double>());
      if (rel == LateralRelation::Tie) throw DerivationMismatch("lateral relation is a tie");
      return rel == LateralRelation::Left ? "left" : "right";
    }
    if (kind == "vertical") {
      const double ya = derivation.at("a_y").get<double>();
      const double yb = derivation.at("b_y").get<double>();
      if (std::fabs(ya - yb) < derivation.at("min_gap").get<double>()) {
        throw DerivationMismatch("vertical gap below threshold");
      }
      return ya > yb ? "above" : "below";
    }
    if (kind == "closer_of_two") {
      const Vec3 ref = vec_from(derivation.at("ref"));
      const double da = pairwise_distance(vec_from(derivation.at("a")), ref);
      const double db = pairwise_distance(vec_from(derivation.at("b")), ref);
      if (std::fabs(da - db) <= derivation.at("tie_eps").get<double>()) {
        throw DerivationMismatch("closer_of_two distances tie");
      }
      return da < db ? derivation.at("a_text").get<std::string>()
                     : derivation.at("b_text").get<std::string>();
    }
    if (kind == "rel_depth") {
      const Vec3 cam_pos = vec_from(derivation.at("cam_pos"));
      const double da = pairwise_distance(vec_from(derivation.at("a")), cam_pos);
      const double db = pairwise_distance(vec_from(derivation.at("b")), cam_pos);
      if (std::fabs(da - db) <= derivation.at("tie_eps").get<double>()) {
        throw DerivationMismatch("rel_depth distances tie");
      }
      return da < db ? "yes" : "no";
    }
    if (kind == "count") {
      const CameraPose cam = cam_from(derivation.at("cam"));
      Intrinsics K;
      K.horizontal_fov = derivation.at("horizontal_fov").get<double>();
      K.width = derivation.at("width").get<int>();
      K.height = derivation.at("height").get<int>();
      const double min_area = derivation.at("min_area_px").get<double>();
      int n = 0;
      for (const auto& bj : derivation.at("boxes")) {
        ObjectInstance obj;
        obj.position = {bj.at("x").get<double>(), bj.at("y").get<double>(),
                        bj.at("z").get<double>()};
        obj.yaw = bj.at("yaw").get<double>();
        obj.footprint_w = bj.at("w").get<double>();
        obj.footprint_d = bj.at("d").get<double>();
        obj.height = bj.at("h").get<double>();
        const auto c = normalize_to_camera(obj.position, cam);
        if (c.z_prime <= 0.1) continue;
        const auto px = project_to_image(obj.position, cam, K);
        if (!px || px->u < 0.0 || px->u > K.width || px->v < 0.0 || px->v > K.height) continue;
        const auto bbox = project_object_bbox(obj, cam, K);
        if (!bbox || bbox->area() < min_area) continue;
        ++n;
      }
      return std::to_string(n);
    }
    if (kind == "ego_move") {
      return describe_trace_past(derivation.at("turn_right").get<bool>(),
                                 derivation.at("degrees").get<double>(),
                                 derivation.at("forward").get<bool>());
    }
    if (kind == "obj_move") {
      const CameraPose cam = cam_from(derivation.at("post_cam"));
      const auto c0 = normalize_to_camera(vec_from(derivation.at("pre")), cam);
      const auto c1 = normalize_to_camera(vec_from(derivation.at("post")), cam);
      const double dx = c1.x_prime - c0.x_prime;
      const double dz = c1.z_prime - c0.z_prime;
      const double adx = std::fabs(dx);
      const double adz = std::fabs(dz);
      if (std::max(adx, adz) <= derivation.at("tie_eps").get<double>() ||
          std::max(adx, adz) < derivation.at("dominant_ratio").get<double>() * std::min(adx, adz)) {
        throw DerivationMismatch("obj_move displacement ambiguous");
      }
      const std::string how = adx > adz ? (dx > 0 ? "to the right" : "to the left")
                                        : (dz > 0 ? "further" : "closer");
      return obj_move_text(derivation.at("mention").get<std::string>(), how);
    }
    if (kind == "pers_lateral") {
      const CameraPose cam = cam_from(derivation.at("post_cam"));
      const auto c = normalize_to_camera(vec_from(derivation.at("obj")), cam);
      if (std::fabs(c.x_prime) <= derivation.at("tie_eps").get<double>()) {
        throw DerivationMismatch("pers_lateral inside tie band");
      }
      return c.x_prime < 0 ? "left" : "right";
    }
    if (kind == "pers_depth") {
      const Vec3 obj = vec_from(derivation.at("obj"));
      const double dm = pairwise_distance(obj, vec_from(derivation.at("mark_pos")));
      const double dc = pairwise_distance(obj, vec_from(derivation.at("cam_pos")));
      if (std::fabs(dm - dc) <= derivation.at("tie_eps").get<double>()) {
        throw DerivationMismatch("pers_depth distances tie");
      }
      return dm < dc ? "closer" : "further";
    }
    if (kind == "goal_aim") {
      const CameraPose cam = cam_from(derivation.at("cam"));
      const auto c = normalize_to_camera(vec_from(derivation.at("obj")), cam);
      const Aim aim = classify_aim(aiming_angle(c), derivation.at("eps").get<double>());
      return aim_option(aim.cls, derivation.at("bucket").get<double>());
    }
    if (kind == "consequence") {
      const CameraPose pre = cam_from(derivation.at("pre_cam"));
      const CameraPose post =
          replay_ego(pre, derivation.at("turn_right").get<bool>(),
                     derivation.at("degrees").get<double>(), derivation.at("forward").get<bool>(),
                     derivation.at("distance").get<double>());
      const Vec3 obj = vec_from(derivation.at("obj"));
      if (derivation.at("form").get<std::string>() == "distance") {
        const double d0 = pairwise_distance(obj, pre.position);
        const double d1 = pairwise_distance(obj, post.position);
        if (std::fabs(d1 - d0) <= derivation.at("tie_eps").get<double>()) {
          throw DerivationMismatch("consequence distance tie");
        }
        const bool further = d1 > d0;
        return (further == derivation.at("ask_further").get<bool>()) ? "yes" : "no";
      }
      const auto c = normalize_to_camera(obj, post);
      const bool facing = std::fabs(aiming_angle(c)) <= derivation.at("eps").get<double>();
      return facing ? "yes" : "no";
    }
    if (kind == "precise3d") {
      const CameraPose cam = cam_from(derivation.at("cam"));
      const auto c = normalize_to_camera(vec_from(derivation.at("obj")), cam);
      return format_triple(c.x_prime, c.y, c.z_prime);
    }
    throw DerivationMismatch("unknown derivation kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw DerivationMismatch(std::string("malformed derivation for ") + task_name(task) + ": " +
                             e.what());
  }
}

}  // namespace spatialqa
