#include "spatialqa/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "spatialqa/errors.hpp"
#include "spatialqa/render.hpp"

namespace spatialqa {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* const kGeneratorVersion = "0.3.0";

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto body = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);
}

namespace {

std::string scene_token(int scene_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%05d", scene_index);
  return buf;
}

struct SceneBuilder {
  const RunConfig& config;
  int scene_index;
  SceneOutput& out;
  int frame_counter{0};
  int episode_index{0};
  int q_index{0};

  std::string add_frame(const Scene& state, std::optional<Pixel> mark = std::nullopt) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "_f%02d", frame_counter++);
    Frame f;
    f.frame_id = state.scene_id + buf;
    f.state = state;
    f.mark = mark;
    out.frames.push_back(std::move(f));
    return out.frames.back().frame_id;
  }

  void add_record(QADraft&& draft, const std::string& scene_id,
                  std::vector<std::string> frame_refs) {
    QARecord r;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "_e%02d_q%02d", episode_index, q_index);
    r.record_id = scene_id + buf;
    r.task = draft.task;
    r.scene_id = scene_id;
    r.scene_index = scene_index;
    r.episode_index = episode_index;
    r.q_index = q_index++;
    r.frame_refs = std::move(frame_refs);
    r.question = std::move(draft.question);
    r.gold = draft.gold;
    if (draft.task != TaskType::Precise3D) {
      r.choices.push_back(std::move(draft.gold));
      for (auto& d : draft.distractors) r.choices.push_back(std::move(d));
      r.gold_index = 0;
    } else {
      r.gold_index = -1;
    }
    r.answer_class = std::move(draft.answer_class);
    r.seed_path = {config.master_seed, scene_index, episode_index};
    r.derivation = std::move(draft.derivation);
    out.records.push_back(std::move(r));
  }

  void next_episode() {
    ++episode_index;
    q_index = 0;
  }

  Rng episode_rng() const {
    return Rng(derive_seed(config.master_seed,
                           {kEpisodeStream, static_cast<uint64_t>(scene_index),
                            static_cast<uint64_t>(episode_index)}));
  }
};

}  // namespace

SceneOutput generate_scene_records(const RunConfig& config, const Catalog& catalog,
                                   int scene_index) {
  SceneOutput out;
  const uint64_t scene_seed =
      derive_seed(config.master_seed, {kSceneStream, static_cast<uint64_t>(scene_index)});
  Scene scene;
  try {
    scene = generate_scene(scene_seed, catalog, config.gen);
  } catch (const std::runtime_error& e) {
    out.failure = e.what();
    return out;
  }
  scene.scene_id = scene_token(scene_index);
  const double min_px = config.gen.min_visible_px();
  const PerSceneQuotas& q = config.per_scene;

  SceneBuilder b{config, scene_index, out};
  const std::string base_frame = b.add_frame(scene);

  // Episode 0: static families plus aiming and precise-3D on the base frame.
  {
    Rng rng = b.episode_rng();
    try {
      for (auto& d :
           gen_rel_spatial(scene, rng, config.qa, q.rel_lateral, q.rel_vertical, q.rel_closer,
                           min_px)) {
        b.add_record(std::move(d), scene.scene_id, {base_frame});
      }
    } catch (const InsufficientObjects&) {
    }
    try {
      for (auto& d : gen_rel_depth(scene, rng, config.qa, q.rel_depth, min_px)) {
        b.add_record(std::move(d), scene.scene_id, {base_frame});
      }
    } catch (const InsufficientObjects&) {
    }
    for (auto& d : gen_count(scene, rng, config.qa, q.count, min_px)) {
      b.add_record(std::move(d), scene.scene_id, {base_frame});
    }
    for (auto& d : gen_goal_aim(scene, rng, config.qa, q.goal_aim, min_px)) {
      b.add_record(std::move(d), scene.scene_id, {base_frame});
    }
    for (auto& d : gen_precise3d(scene, rng, config.qa, q.precise3d, min_px)) {
      b.add_record(std::move(d), scene.scene_id, {base_frame});
    }
  }

  // Egocentric-movement episodes: two frames each.
  for (int e = 0; e < q.ego_traces; ++e) {
    b.next_episode();
    Rng rng = b.episode_rng();
    try {
      ActionTrace trace = sample_ego_trace(scene, rng, config.sim);
      QADraft d = gen_ego_move(trace, rng);
      const std::string post_frame = b.add_frame(trace.post_state);
      b.add_record(std::move(d), scene.scene_id, {base_frame, post_frame});
    } catch (const TraceFailure&) {
    }
  }

  // Object-movement episodes; the camera co-moves half the time so answering
  // requires factoring out ego-motion.
  for (int e = 0; e < q.obj_moves; ++e) {
    b.next_episode();
    Rng rng = b.episode_rng();
    try {
      ObjectMove move = sample_object_move(scene, rng, config.sim, min_px);
      Scene post = move.post_state;
      if (rng.bernoulli(0.5)) {
        try {
          post = sample_ego_trace(post, rng, config.sim).post_state;
        } catch (const TraceFailure&) {
        }
      }
      auto d = gen_obj_move(scene, post, move.instance_id, rng, config.qa, min_px);
      if (d) {
        const std::string post_frame = b.add_frame(post);
        b.add_record(std::move(*d), scene.scene_id, {base_frame, post_frame});
      }
    } catch (const NoMovableObject&) {
    }
  }

  // Perspective episodes: a marked view of the original frame.
  for (int e = 0; e < q.perspective_episodes; ++e) {
    b.next_episode();
    Rng rng = b.episode_rng();
    try {
      MarkTeleport mt = teleport_to_mark(scene, rng, config.sim);
      auto drafts = gen_perspective(scene, mt.mark, mt.post_state, mt.turned_right, rng, config.qa,
                                    q.perspective_lateral, q.perspective_depth, min_px);
      if (drafts.empty()) continue;
      const std::string mark_frame = b.add_frame(scene, mt.mark);
      for (auto& d : drafts) {
        b.add_record(std::move(d), scene.scene_id, {mark_frame});
      }
    } catch (const NoNavigablePoint&) {
    }
  }

  // Action-consequence episodes: only the first frame is shown.
  for (int e = 0; e < q.consequence_traces; ++e) {
    b.next_episode();
    Rng rng = b.episode_rng();
    try {
      ActionTrace trace = sample_ego_trace(scene, rng, config.sim);
      for (auto& d : gen_action_consequence(scene, trace, rng, config.qa, q.consequence_per_trace,
                                            min_px)) {
        b.add_record(std::move(d), scene.scene_id, {base_frame});
      }
    } catch (const TraceFailure&) {
    }
  }

  out.ok = true;
  return out;
}

GenerateResult run_generate(const RunConfig& config) {
  const Catalog catalog =
      config.catalog_path.empty() ? builtin_catalog() : load_catalog(config.catalog_path);

  std::vector<SceneOutput> outputs(static_cast<size_t>(config.scenes));
  parallel_for(config.scenes, config.workers,
               [&](int i) { outputs[static_cast<size_t>(i)] = generate_scene_records(config, catalog, i); });

  std::vector<QARecord> records;
  std::vector<Frame> frames;
  int failed = 0;
  for (auto& o : outputs) {
    if (!o.ok) {
      ++failed;
      continue;
    }
    for (auto& r : o.records) records.push_back(std::move(r));
    for (auto& f : o.frames) frames.push_back(std::move(f));
  }

  BalancePolicy policy = config.balance_policy;
  if (policy.seed == 0) policy.seed = config.master_seed;
  records = balance(std::move(records), policy);
  split_records(records, config.test_frac, config.master_seed, policy.mix_weights);

  // Keep only frames still referenced after balancing.
  std::set<std::string> referenced;
  for (const auto& r : records) {
    for (const auto& fr : r.frame_refs) referenced.insert(fr);
  }
  std::vector<Frame> kept_frames;
  for (auto& f : frames) {
    if (referenced.count(f.frame_id)) kept_frames.push_back(std::move(f));
  }

  ExportInfo info;
  info.dir = config.out_dir;
  info.generator_version = kGeneratorVersion;
  info.master_seed = config.master_seed;
  info.catalog_hash = catalog_hash(catalog);
  info.scenes_requested = config.scenes;
  info.scenes_generated = config.scenes - failed;
  info.scenes_failed = failed;

  GenerateResult result;
  result.manifest = export_dataset(records, kept_frames, info);
  result.scenes_failed = failed;

  // The echo records the generation-semantic parameters; invocation details
  // (output path, worker count) do not shape the dataset bytes and are
  // omitted so identical configs yield identical trees.
  json echo = config.to_json();
  echo.erase("out_dir");
  echo.erase("workers");
  std::ofstream cfg(fs::path(config.out_dir) / "config.json", std::ios::binary);
  if (!cfg) throw IoError("cannot write config echo under " + config.out_dir);
  cfg << echo.dump(2) << "\n";
  cfg.close();

  if (config.render) {
    write_frame_svgs(kept_frames, (fs::path(config.out_dir) / "frames").string());
  }
  result.manifest_path = (fs::path(config.out_dir) / "manifest.json").string();
  return result;
}

// ---------------------------------------------------------------------------
// config (de)serialization
// ---------------------------------------------------------------------------

nlohmann::ordered_json RunConfig::to_json() const {
  json j;
  j["master_seed"] = master_seed;
  j["scenes"] = scenes;
  j["workers"] = workers;
  j["out_dir"] = out_dir;
  j["catalog_path"] = catalog_path;
  j["render"] = render;
  j["test_frac"] = test_frac;
  j["gen"] = json{{"room_min_w", gen.room_min_w},
                  {"room_max_w", gen.room_max_w},
                  {"room_min_d", gen.room_min_d},
                  {"room_max_d", gen.room_max_d},
                  {"min_objects", gen.min_objects},
                  {"max_objects", gen.max_objects},
                  {"cluster_prob", gen.cluster_prob},
                  {"cluster_extra_max", gen.cluster_extra_max},
                  {"placement_gap", gen.placement_gap},
                  {"camera_height", gen.camera_height},
                  {"camera_candidates", gen.camera_candidates},
                  {"min_visible", gen.min_visible},
                  {"min_visible_px_frac", gen.min_visible_px_frac},
                  {"max_attempts", gen.max_attempts},
                  {"horizontal_fov", gen.intrinsics.horizontal_fov},
                  {"image_width", gen.intrinsics.width},
                  {"image_height", gen.intrinsics.height}};
  j["sim"] = json{{"rotate_angles", sim.rotate_angles},
                  {"forward_prob", sim.forward_prob},
                  {"forward_min", sim.forward_min},
                  {"forward_max", sim.forward_max},
                  {"object_move_min", sim.object_move_min},
                  {"object_move_max", sim.object_move_max},
                  {"mark_window_lo", sim.mark_window_lo},
                  {"mark_window_hi", sim.mark_window_hi},
                  {"min_bbox_frac", sim.min_bbox_frac},
                  {"max_attempts", sim.max_attempts},
                  {"degrade_blocked_move", sim.degrade_blocked_move}};
  j["qa"] = json{{"tie_eps", qa.tie_eps},
                 {"vertical_gap", qa.vertical_gap},
                 {"aim_eps", qa.aim_eps},
                 {"dominant_ratio", qa.dominant_ratio},
                 {"precise_tolerance", qa.precise_tolerance}};
  j["per_scene"] = json{{"rel_lateral", per_scene.rel_lateral},
                        {"rel_vertical", per_scene.rel_vertical},
                        {"rel_closer", per_scene.rel_closer},
                        {"rel_depth", per_scene.rel_depth},
                        {"count", per_scene.count},
                        {"ego_traces", per_scene.ego_traces},
                        {"obj_moves", per_scene.obj_moves},
                        {"perspective_episodes", per_scene.perspective_episodes},
                        {"perspective_lateral", per_scene.perspective_lateral},
                        {"perspective_depth", per_scene.perspective_depth},
                        {"goal_aim", per_scene.goal_aim},
                        {"consequence_traces", per_scene.consequence_traces},
                        {"consequence_per_trace", per_scene.consequence_per_trace},
                        {"precise3d", per_scene.precise3d}};
  json quotas;
  for (const auto& [task, cap] : balance_policy.quotas) quotas[task_name(task)] = cap;
  json weights;
  for (const auto& [task, w] : balance_policy.mix_weights) weights[task_name(task)] = w;
  j["balance"] = json{{"max_class_frac", balance_policy.max_class_frac},
                      {"proportional_dynamic_mix", balance_policy.proportional_dynamic_mix},
                      {"seed", balance_policy.seed},
                      {"quotas", quotas},
                      {"mix_weights", weights}};
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::ordered_json& j) {
  RunConfig c;
  c.master_seed = j.value("master_seed", c.master_seed);
  c.scenes = j.value("scenes", c.scenes);
  c.workers = j.value("workers", c.workers);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.catalog_path = j.value("catalog_path", c.catalog_path);
  c.render = j.value("render", c.render);
  c.test_frac = j.value("test_frac", c.test_frac);
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    c.gen.room_min_w = g.value("room_min_w", c.gen.room_min_w);
    c.gen.room_max_w = g.value("room_max_w", c.gen.room_max_w);
    c.gen.room_min_d = g.value("room_min_d", c.gen.room_min_d);
    c.gen.room_max_d = g.value("room_max_d", c.gen.room_max_d);
    c.gen.min_objects = g.value("min_objects", c.gen.min_objects);
    c.gen.max_objects = g.value("max_objects", c.gen.max_objects);
    c.gen.cluster_prob = g.value("cluster_prob", c.gen.cluster_prob);
    c.gen.cluster_extra_max = g.value("cluster_extra_max", c.gen.cluster_extra_max);
    c.gen.placement_gap = g.value("placement_gap", c.gen.placement_gap);
    c.gen.camera_height = g.value("camera_height", c.gen.camera_height);
    c.gen.camera_candidates = g.value("camera_candidates", c.gen.camera_candidates);
    c.gen.min_visible = g.value("min_visible", c.gen.min_visible);
    c.gen.min_visible_px_frac = g.value("min_visible_px_frac", c.gen.min_visible_px_frac);
    c.gen.max_attempts = g.value("max_attempts", c.gen.max_attempts);
    c.gen.intrinsics.horizontal_fov = g.value("horizontal_fov", c.gen.intrinsics.horizontal_fov);
    c.gen.intrinsics.width = g.value("image_width", c.gen.intrinsics.width);
    c.gen.intrinsics.height = g.value("image_height", c.gen.intrinsics.height);
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    c.sim.rotate_angles = s.value("rotate_angles", c.sim.rotate_angles);
    c.sim.forward_prob = s.value("forward_prob", c.sim.forward_prob);
    c.sim.forward_min = s.value("forward_min", c.sim.forward_min);
    c.sim.forward_max = s.value("forward_max", c.sim.forward_max);
    c.sim.object_move_min = s.value("object_move_min", c.sim.object_move_min);
    c.sim.object_move_max = s.value("object_move_max", c.sim.object_move_max);
    c.sim.mark_window_lo = s.value("mark_window_lo", c.sim.mark_window_lo);
    c.sim.mark_window_hi = s.value("mark_window_hi", c.sim.mark_window_hi);
    c.sim.min_bbox_frac = s.value("min_bbox_frac", c.sim.min_bbox_frac);
    c.sim.max_attempts = s.value("max_attempts", c.sim.max_attempts);
    c.sim.degrade_blocked_move = s.value("degrade_blocked_move", c.sim.degrade_blocked_move);
  }
  if (j.contains("qa")) {
    const auto& q = j.at("qa");
    c.qa.tie_eps = q.value("tie_eps", c.qa.tie_eps);
    c.qa.vertical_gap = q.value("vertical_gap", c.qa.vertical_gap);
    c.qa.aim_eps = q.value("aim_eps", c.qa.aim_eps);
    c.qa.dominant_ratio = q.value("dominant_ratio", c.qa.dominant_ratio);
    c.qa.precise_tolerance = q.value("precise_tolerance", c.qa.precise_tolerance);
  }
  if (j.contains("per_scene")) {
    const auto& p = j.at("per_scene");
    c.per_scene.rel_lateral = p.value("rel_lateral", c.per_scene.rel_lateral);
    c.per_scene.rel_vertical = p.value("rel_vertical", c.per_scene.rel_vertical);
    c.per_scene.rel_closer = p.value("rel_closer", c.per_scene.rel_closer);
    c.per_scene.rel_depth = p.value("rel_depth", c.per_scene.rel_depth);
    c.per_scene.count = p.value("count", c.per_scene.count);
    c.per_scene.ego_traces = p.value("ego_traces", c.per_scene.ego_traces);
    c.per_scene.obj_moves = p.value("obj_moves", c.per_scene.obj_moves);
    c.per_scene.perspective_episodes =
        p.value("perspective_episodes", c.per_scene.perspective_episodes);
    c.per_scene.perspective_lateral =
        p.value("perspective_lateral", c.per_scene.perspective_lateral);
    c.per_scene.perspective_depth = p.value("perspective_depth", c.per_scene.perspective_depth);
    c.per_scene.goal_aim = p.value("goal_aim", c.per_scene.goal_aim);
    c.per_scene.consequence_traces =
        p.value("consequence_traces", c.per_scene.consequence_traces);
    c.per_scene.consequence_per_trace =
        p.value("consequence_per_trace", c.per_scene.consequence_per_trace);
    c.per_scene.precise3d = p.value("precise3d", c.per_scene.precise3d);
  }
  if (j.contains("balance")) {
    const auto& b = j.at("balance");
    c.balance_policy.max_class_frac = b.value("max_class_frac", c.balance_policy.max_class_frac);
    c.balance_policy.proportional_dynamic_mix =
        b.value("proportional_dynamic_mix", c.balance_policy.proportional_dynamic_mix);
    c.balance_policy.seed = b.value("seed", c.balance_policy.seed);
    if (b.contains("quotas")) {
      c.balance_policy.quotas.clear();
      for (const auto& [name, cap] : b.at("quotas").items()) {
        const auto task = parse_task(name);
        if (!task) throw IoError("config: unknown task in quotas: " + name);
        c.balance_policy.quotas[*task] = cap.get<int>();
      }
    }
    if (b.contains("mix_weights")) {
      c.balance_policy.mix_weights.clear();
      for (const auto& [name, w] : b.at("mix_weights").items()) {
        const auto task = parse_task(name);
        if (!task) throw IoError("config: unknown task in mix_weights: " + name);
        c.balance_policy.mix_weights[*task] = w.get<double>();
      }
    }
  }
  return c;
}

}  // namespace spatialqa
