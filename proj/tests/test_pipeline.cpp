#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "spatialqa/pipeline.hpp"

using namespace spatialqa;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_config(const std::string& out_dir) {
  RunConfig config;
  config.master_seed = 99;
  config.scenes = 30;
  config.out_dir = out_dir;
  return config;
}

}  // namespace

TEST_CASE("run_generate is byte-identical across runs and worker counts") {
  const std::string a = "/tmp/spatialqa_pipe_a";
  const std::string b = "/tmp/spatialqa_pipe_b";
  const std::string c = "/tmp/spatialqa_pipe_c";
  for (const auto& d : {a, b, c}) fs::remove_all(d);

  RunConfig ca = small_config(a);
  ca.render = true;
  RunConfig cb = small_config(b);
  cb.render = true;
  RunConfig cc = small_config(c);
  cc.render = true;
  cc.workers = 4;

  run_generate(ca);
  run_generate(cb);
  run_generate(cc);

  for (const char* file : {"dataset.jsonl", "frames.jsonl", "manifest.json"}) {
    CHECK(slurp(fs::path(a) / file) == slurp(fs::path(b) / file));
    CHECK(slurp(fs::path(a) / file) == slurp(fs::path(c) / file));
  }
  // Rendered trees match too.
  std::vector<std::string> svgs;
  for (const auto& e : fs::directory_iterator(fs::path(a) / "frames")) {
    svgs.push_back(e.path().filename().string());
  }
  CHECK(!svgs.empty());
  for (const auto& name : svgs) {
    CHECK(fs::exists(fs::path(c) / "frames" / name));
    CHECK(slurp(fs::path(a) / "frames" / name) == slurp(fs::path(c) / "frames" / name));
  }
}

TEST_CASE("generated dataset is coherent") {
  const std::string dir = "/tmp/spatialqa_pipe_coherent";
  fs::remove_all(dir);
  RunConfig config = small_config(dir);
  config.master_seed = 5150;
  const GenerateResult result = run_generate(config);
  const DatasetBundle bundle = load_dataset(dir);

  CHECK(static_cast<int>(bundle.records.size()) == result.manifest.records_total);
  CHECK(static_cast<int>(bundle.frames.size()) == result.manifest.frames_total);

  std::set<std::string> frame_ids;
  for (const auto& f : bundle.frames) frame_ids.insert(f.frame_id);

  std::map<std::string, std::array<int, 3>> counts;
  std::set<std::string> train_scenes, test_scenes;
  for (const auto& r : bundle.records) {
    // Frame references resolve.
    REQUIRE(!r.frame_refs.empty());
    for (const auto& ref : r.frame_refs) CHECK(frame_ids.count(ref) == 1);
    // Choice invariants.
    if (r.task == TaskType::Precise3D) {
      CHECK(r.choices.empty());
      CHECK(r.gold_index == -1);
    } else {
      CHECK(r.choices.size() >= 2);
      CHECK(r.choices.size() <= 4);
      CHECK(r.choices[static_cast<size_t>(r.gold_index)] == r.gold);
      std::set<std::string> uniq(r.choices.begin(), r.choices.end());
      CHECK(uniq.size() == r.choices.size());
    }
    // Oracle closure.
    CHECK(recompute_gold(r.task, r.derivation) == r.gold);
    auto& c = counts[task_name(r.task)];
    ++(r.split == "test" ? c[1] : c[0]);
    ++c[2];
    (r.split == "test" ? test_scenes : train_scenes).insert(r.scene_id);
  }
  CHECK(counts == result.manifest.counts);
  for (const auto& s : test_scenes) CHECK(train_scenes.count(s) == 0);

  // All eight choice families (plus precise3d) are present at this scale.
  for (int t = 0; t < kTaskCount; ++t) {
    INFO(task_name(static_cast<TaskType>(t)));
    CHECK(counts.count(task_name(static_cast<TaskType>(t))) == 1);
  }
}

TEST_CASE("no emitted question contains an ambiguous mention") {
  const std::string dir = "/tmp/spatialqa_pipe_mentions";
  fs::remove_all(dir);
  RunConfig config = small_config(dir);
  config.master_seed = 777;
  run_generate(config);
  const DatasetBundle bundle = load_dataset(dir);
  std::map<std::string, const Frame*> frames;
  for (const auto& f : bundle.frames) frames[f.frame_id] = &f;

  const double min_px = config.gen.min_visible_px();
  int scanned = 0;
  for (const auto& r : bundle.records) {
    const Frame* frame = frames.at(r.frame_refs.front());
    const Scene& scene = frame->state;
    const auto vis = visible_objects(scene, scene.camera, scene.intrinsics, min_px);
    for (size_t i = 0; i < scene.objects.size(); ++i) {
      const std::string mention = "the " + scene.objects[i].chosen_phrase;
      if (r.question.find(mention) == std::string::npos && r.gold.find(mention) != 0) continue;
      // Re-run the ambiguity guard for the mentioned phrase.
      const auto m = unambiguous_mention(scene, vis, i);
      bool guard_ok = m.has_value() && *m == mention;
      if (!guard_ok) {
        // The same phrase may hang on another instance; any unambiguous
        // holder of this phrase satisfies the guard.
        for (const auto& v : vis) {
          if (scene.objects[v.index].chosen_phrase == scene.objects[i].chosen_phrase) {
            const auto m2 = unambiguous_mention(scene, vis, v.index);
            if (m2.has_value()) guard_ok = true;
          }
        }
      }
      CHECK(guard_ok);
      ++scanned;
    }
  }
  CHECK(scanned > 100);
}

TEST_CASE("explicit quota is respected exactly") {
  const std::string dir = "/tmp/spatialqa_pipe_quota";
  fs::remove_all(dir);
  RunConfig config = small_config(dir);
  config.master_seed = 31;
  config.balance_policy.quotas[TaskType::Perspective] = 40;
  const GenerateResult result = run_generate(config);
  CHECK(result.manifest.counts.at("perspective")[2] == 40);
}

TEST_CASE("config round trips through JSON") {
  RunConfig config;
  config.master_seed = 12;
  config.scenes = 77;
  config.per_scene.goal_aim = 9;
  config.balance_policy.quotas[TaskType::Count] = 123;
  config.sim.rotate_angles = {10, 20};
  const RunConfig back = RunConfig::from_json(config.to_json());
  CHECK(back.master_seed == 12);
  CHECK(back.scenes == 77);
  CHECK(back.per_scene.goal_aim == 9);
  CHECK(back.balance_policy.quotas.at(TaskType::Count) == 123);
  CHECK(back.sim.rotate_angles == std::vector<double>{10, 20});
  CHECK(back.to_json() == config.to_json());
}
