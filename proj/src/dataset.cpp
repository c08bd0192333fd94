#include "spatialqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "spatialqa/errors.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::map<TaskType, double>& default_mix_weights() {
  // Reference test-set composition: 647 object movement, 647 egocentric
  // movement, 592 goal aiming, 1336 action consequence, 778 perspective.
  static const std::map<TaskType, double> weights{
      {TaskType::ObjMove, 647.0},  {TaskType::EgoMove, 647.0},
      {TaskType::GoalAim, 592.0},  {TaskType::ActionConsequence, 1336.0},
      {TaskType::Perspective, 778.0},
  };
  return weights;
}

namespace {

/// Largest-remainder apportionment of total among weights. Deterministic:
/// remainder ties resolve by position.
std::vector<int> apportion(int total, const std::vector<double>& weights) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> alloc(weights.size(), 0);
  if (total <= 0 || wsum <= 0.0) return alloc;
  std::vector<std::pair<double, size_t>> rema;
  int assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / wsum;
    alloc[i] = static_cast<int>(std::floor(exact));
    assigned += alloc[i];
    rema.push_back({exact - alloc[i], i});
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned && k < static_cast<int>(rema.size()); ++k) {
    ++alloc[rema[static_cast<size_t>(k)].second];
  }
  return alloc;
}

/// Drops records of one task until no gold class exceeds max_frac of the
/// task's records. The drop order within a class is a seeded shuffle.
void cap_classes(std::vector<QARecord>& records, std::vector<size_t>& idxs, double max_frac,
                 Rng& rng) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::string, std::vector<size_t>> by_class;
    for (size_t i : idxs) by_class[records[i].answer_class].push_back(i);
    const double total = static_cast<double>(idxs.size());
    if (total == 0.0) return;
    for (auto& [cls, members] : by_class) {
      const double count = static_cast<double>(members.size());
      if (count <= max_frac * total) continue;
      // Smallest d with (count - d) <= max_frac * (total - d).
      const int d = static_cast<int>(std::ceil((count - max_frac * total) / (1.0 - max_frac)));
      std::vector<size_t> shuffled = members;
      rng.shuffle(shuffled);
      shuffled.resize(shuffled.size() - static_cast<size_t>(std::min<int>(d, shuffled.size())));
      std::vector<size_t> keep(shuffled.begin(), shuffled.end());
      std::sort(keep.begin(), keep.end());
      std::vector<size_t> next;
      next.reserve(idxs.size());
      for (size_t i : idxs) {
        if (records[i].answer_class != cls ||
            std::binary_search(keep.begin(), keep.end(), i)) {
          next.push_back(i);
        }
      }
      idxs = std::move(next);
      changed = true;
      break;  // recompute fractions against the reduced total
    }
  }
}

/// Subsamples one task down to exactly target records, allocating across
/// gold classes proportionally (largest remainder) while keeping every class
/// at or below max_frac of the target.
void subsample_task(std::vector<QARecord>& records, std::vector<size_t>& idxs, int target,
                    double max_frac, Rng& rng) {
  if (target >= static_cast<int>(idxs.size())) return;
  std::map<std::string, std::vector<size_t>> by_class;
  for (size_t i : idxs) by_class[records[i].answer_class].push_back(i);
  std::vector<std::string> classes;
  std::vector<double> weights;
  for (auto& [cls, members] : by_class) {
    classes.push_back(cls);
    weights.push_back(static_cast<double>(members.size()));
  }
  std::vector<int> want = apportion(target, weights);
  const int cap = std::max(1, static_cast<int>(std::floor(max_frac * target)));
  // Clamp to availability and the class cap, then redistribute any shortfall
  // to classes with headroom.
  auto headroom = [&](size_t j) {
    const int avail = static_cast<int>(by_class[classes[j]].size());
    return std::min(avail, cap) - want[j];
  };
  for (size_t j = 0; j < want.size(); ++j) {
    want[j] = std::min(want[j], std::min(static_cast<int>(by_class[classes[j]].size()), cap));
  }
  int assigned = std::accumulate(want.begin(), want.end(), 0);
  while (assigned < target) {
    int best = -1;
    for (size_t j = 0; j < want.size(); ++j) {
      if (headroom(j) <= 0) continue;
      if (best < 0 || headroom(j) > headroom(static_cast<size_t>(best))) {
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;  // cap makes the target unreachable; keep fewer
    ++want[static_cast<size_t>(best)];
    ++assigned;
  }
  std::vector<size_t> kept;
  for (size_t j = 0; j < classes.size(); ++j) {
    std::vector<size_t> members = by_class[classes[j]];
    rng.shuffle(members);
    members.resize(static_cast<size_t>(want[j]));
    kept.insert(kept.end(), members.begin(), members.end());
  }
  std::sort(kept.begin(), kept.end());
  idxs = std::move(kept);
}

}  // namespace

std::vector<QARecord> balance(std::vector<QARecord> records, const BalancePolicy& policy) {
  std::map<TaskType, std::vector<size_t>> by_task;
  for (size_t i = 0; i < records.size(); ++i) by_task[records[i].task].push_back(i);

  // Gold-class caps first. Precise3D has a single degenerate class and is
  // exempt.
  for (auto& [task, idxs] : by_task) {
    if (task == TaskType::Precise3D) continue;
    Rng rng(derive_seed(policy.seed, {kBalanceStream, 1, static_cast<uint64_t>(task)}));
    cap_classes(records, idxs, policy.max_class_frac, rng);
  }

  // Explicit quotas.
  for (auto& [task, idxs] : by_task) {
    auto it = policy.quotas.find(task);
    if (it == policy.quotas.end()) continue;
    Rng rng(derive_seed(policy.seed, {kBalanceStream, 2, static_cast<uint64_t>(task)}));
    subsample_task(records, idxs, it->second, policy.max_class_frac, rng);
  }

  // Proportional mix across the dynamic tasks without explicit quotas: find
  // the largest total whose apportionment fits the available counts, so that
  // reapplying the policy is a no-op.
  if (policy.proportional_dynamic_mix) {
    std::vector<TaskType> tasks;
    std::vector<double> weights;
    std::vector<int> avail;
    for (const auto& [task, w] : policy.mix_weights) {
      if (policy.quotas.count(task)) continue;
      auto it = by_task.find(task);
      if (it == by_task.end() || it->second.empty()) continue;
      tasks.push_back(task);
      weights.push_back(w);
      avail.push_back(static_cast<int>(it->second.size()));
    }
    if (!tasks.empty()) {
      const int upper = std::accumulate(avail.begin(), avail.end(), 0);
      for (int n = upper; n >= 0; --n) {
        std::vector<int> alloc = apportion(n, weights);
        bool feasible = true;
        for (size_t j = 0; j < alloc.size(); ++j) {
          if (alloc[j] > avail[j]) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        for (size_t j = 0; j < tasks.size(); ++j) {
          Rng rng(derive_seed(policy.seed, {kBalanceStream, 3, static_cast<uint64_t>(tasks[j])}));
          subsample_task(records, by_task[tasks[j]], alloc[j], policy.max_class_frac, rng);
        }
        break;
      }
    }
  }

  std::vector<char> keep(records.size(), 0);
  for (const auto& [task, idxs] : by_task) {
    for (size_t i : idxs) keep[i] = 1;
  }
  std::vector<QARecord> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(std::move(records[i]));
  }
  return out;
}

void split_records(std::vector<QARecord>& records, double test_frac, uint64_t seed,
                   const std::map<TaskType, double>& mix_weights) {
  for (auto& r : records) r.split = "train";
  if (records.empty() || test_frac <= 0.0) return;

  // Per-scene record counts, scenes in first-appearance order.
  std::vector<std::string> scenes;
  std::map<std::string, std::map<TaskType, int>> task_counts;
  std::map<std::string, int> totals;
  for (const auto& r : records) {
    if (!totals.count(r.scene_id)) scenes.push_back(r.scene_id);
    ++task_counts[r.scene_id][r.task];
    ++totals[r.scene_id];
  }

  std::map<TaskType, double> overall;
  for (const auto& r : records) ++overall[r.task];
  const int target_total =
      static_cast<int>(std::llround(test_frac * static_cast<double>(records.size())));
  if (target_total <= 0) return;

  Rng rng(derive_seed(seed, {kSplitStream}));
  rng.shuffle(scenes);

  // Greedy scene draw: keep the dynamic-task counts proportional to the fill
  // level, so the final test mix tracks the overall mix at any scale.
  std::map<TaskType, double> targets;
  for (const auto& [task, w] : mix_weights) {
    (void)w;
    targets[task] = test_frac * overall[task];
  }
  std::map<TaskType, int> current;
  int current_total = 0;
  std::vector<std::string> test_scenes;
  constexpr size_t kWindow = 16;
  size_t cursor = 0;
  std::vector<std::string> pool = scenes;
  while (current_total < target_total && cursor < pool.size()) {
    const size_t limit = std::min(pool.size(), cursor + kWindow);
    double best_cost = 0.0;
    size_t best = pool.size();
    for (size_t i = cursor; i < limit; ++i) {
      const auto& counts = task_counts[pool[i]];
      const int scene_total = totals[pool[i]];
      const double fill =
          std::min(1.0, static_cast<double>(current_total + scene_total) / target_total);
      double cost = 0.0;
      for (const auto& [task, target] : targets) {
        auto it = counts.find(task);
        const int add = it == counts.end() ? 0 : it->second;
        const double dev = (current[task] + add) - fill * target;
        cost += dev * dev / (target + 1.0);
      }
      if (best == pool.size() || cost < best_cost) {
        best = i;
        best_cost = cost;
      }
    }
    const std::string chosen = pool[best];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    test_scenes.push_back(chosen);
    for (const auto& [task, n] : task_counts[chosen]) current[task] += n;
    current_total += totals[chosen];
  }

  std::set<std::string> test_set(test_scenes.begin(), test_scenes.end());
  for (auto& r : records) {
    if (test_set.count(r.scene_id)) r.split = "test";
  }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json record_json(const QARecord& r, const std::vector<std::string>& choices, int gold_index,
                 const std::vector<int>& perm) {
  json j;
  j["record_id"] = r.record_id;
  j["task"] = task_name(r.task);
  j["scene_id"] = r.scene_id;
  j["split"] = r.split;
  j["frame_refs"] = r.frame_refs;
  j["question"] = r.question;
  j["choices"] = choices;
  j["gold_index"] = gold_index;
  j["gold"] = r.gold;
  j["answer_class"] = r.answer_class;
  j["choice_perm"] = perm;
  j["seed_path"] = json{{"master_seed", r.seed_path.master_seed},
                        {"scene_index", r.seed_path.scene_index},
                        {"episode_index", r.seed_path.episode_index}};
  j["q_index"] = r.q_index;
  j["derivation"] = r.derivation;
  return j;
}

QARecord record_from_json(const json& j) {
  QARecord r;
  r.record_id = j.at("record_id").get<std::string>();
  const auto task = parse_task(j.at("task").get<std::string>());
  if (!task) throw IoError("unknown task in record: " + j.at("task").get<std::string>());
  r.task = *task;
  r.scene_id = j.at("scene_id").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.frame_refs = j.at("frame_refs").get<std::vector<std::string>>();
  r.question = j.at("question").get<std::string>();
  r.choices = j.at("choices").get<std::vector<std::string>>();
  r.gold_index = j.at("gold_index").get<int>();
  r.gold = j.at("gold").get<std::string>();
  r.answer_class = j.at("answer_class").get<std::string>();
  r.choice_perm = j.at("choice_perm").get<std::vector<int>>();
  r.seed_path.master_seed = j.at("seed_path").at("master_seed").get<uint64_t>();
  r.seed_path.scene_index = j.at("seed_path").at("scene_index").get<int>();
  r.seed_path.episode_index = j.at("seed_path").at("episode_index").get<int>();
  r.scene_index = r.seed_path.scene_index;
  r.episode_index = r.seed_path.episode_index;
  r.q_index = j.at("q_index").get<int>();
  r.derivation = j.at("derivation");
  return r;
}

}  // namespace

nlohmann::ordered_json frame_json(const Frame& f) {
  json j;
  j["frame_id"] = f.frame_id;
  j["scene_id"] = f.state.scene_id;
  j["seed"] = f.state.seed;
  j["room"] = json{{"width", f.state.room.width},
                   {"depth", f.state.room.depth},
                   {"floor_y", f.state.room.floor_y}};
  j["camera"] = json{{"x", f.state.camera.position.x},
                     {"y", f.state.camera.position.y},
                     {"z", f.state.camera.position.z},
                     {"yaw", f.state.camera.yaw}};
  j["intrinsics"] = json{{"horizontal_fov", f.state.intrinsics.horizontal_fov},
                         {"width", f.state.intrinsics.width},
                         {"height", f.state.intrinsics.height}};
  if (f.mark) {
    j["mark"] = json{{"u", f.mark->u}, {"v", f.mark->v}};
  } else {
    j["mark"] = nullptr;
  }
  json objs = json::array();
  for (const auto& o : f.state.objects) {
    objs.push_back(json{{"id", o.instance_id},
                        {"class", o.class_name},
                        {"phrase", o.chosen_phrase},
                        {"countable", o.countable},
                        {"x", o.position.x},
                        {"y", o.position.y},
                        {"z", o.position.z},
                        {"yaw", o.yaw},
                        {"footprint_w", o.footprint_w},
                        {"footprint_d", o.footprint_d},
                        {"height", o.height}});
  }
  j["objects"] = objs;
  return j;
}

Frame frame_from_json(const nlohmann::ordered_json& j) {
  Frame f;
  f.frame_id = j.at("frame_id").get<std::string>();
  f.state.scene_id = j.at("scene_id").get<std::string>();
  f.state.seed = j.at("seed").get<uint64_t>();
  f.state.room.width = j.at("room").at("width").get<double>();
  f.state.room.depth = j.at("room").at("depth").get<double>();
  f.state.room.floor_y = j.at("room").at("floor_y").get<double>();
  f.state.camera.position = {j.at("camera").at("x").get<double>(),
                             j.at("camera").at("y").get<double>(),
                             j.at("camera").at("z").get<double>()};
  f.state.camera.yaw = j.at("camera").at("yaw").get<double>();
  f.state.intrinsics.horizontal_fov = j.at("intrinsics").at("horizontal_fov").get<double>();
  f.state.intrinsics.width = j.at("intrinsics").at("width").get<int>();
  f.state.intrinsics.height = j.at("intrinsics").at("height").get<int>();
  if (!j.at("mark").is_null()) {
    f.mark = Pixel{j.at("mark").at("u").get<double>(), j.at("mark").at("v").get<double>()};
  }
  for (const auto& oj : j.at("objects")) {
    ObjectInstance o;
    o.instance_id = oj.at("id").get<std::string>();
    o.class_name = oj.at("class").get<std::string>();
    o.chosen_phrase = oj.at("phrase").get<std::string>();
    o.countable = oj.at("countable").get<bool>();
    o.position = {oj.at("x").get<double>(), oj.at("y").get<double>(), oj.at("z").get<double>()};
    o.yaw = oj.at("yaw").get<double>();
    o.footprint_w = oj.at("footprint_w").get<double>();
    o.footprint_d = oj.at("footprint_d").get<double>();
    o.height = oj.at("height").get<double>();
    f.state.objects.push_back(std::move(o));
  }
  return f;
}

nlohmann::ordered_json manifest_json(const DatasetManifest& m) {
  json j;
  j["generator_version"] = m.generator_version;
  j["master_seed"] = m.master_seed;
  j["catalog_hash"] = m.catalog_hash;
  j["scenes_requested"] = m.scenes_requested;
  j["scenes_generated"] = m.scenes_generated;
  j["scenes_failed"] = m.scenes_failed;
  j["records_total"] = m.records_total;
  j["frames_total"] = m.frames_total;
  json counts;
  for (const auto& [task, c] : m.counts) {
    counts[task] = json{{"train", c[0]}, {"test", c[1]}, {"total", c[2]}};
  }
  j["counts"] = counts;
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::ordered_json& j) {
  DatasetManifest m;
  m.generator_version = j.at("generator_version").get<std::string>();
  m.master_seed = j.at("master_seed").get<uint64_t>();
  m.catalog_hash = j.at("catalog_hash").get<std::string>();
  m.scenes_requested = j.at("scenes_requested").get<int>();
  m.scenes_generated = j.at("scenes_generated").get<int>();
  m.scenes_failed = j.at("scenes_failed").get<int>();
  m.records_total = j.at("records_total").get<int>();
  m.frames_total = j.at("frames_total").get<int>();
  for (const auto& [task, c] : j.at("counts").items()) {
    m.counts[task] = {c.at("train").get<int>(), c.at("test").get<int>(), c.at("total").get<int>()};
  }
  return m;
}

DatasetManifest export_dataset(const std::vector<QARecord>& records,
                               const std::vector<Frame>& frames, const ExportInfo& info) {
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const QARecord& ra = records[a];
    const QARecord& rb = records[b];
    return std::tie(ra.scene_index, ra.episode_index, ra.q_index) <
           std::tie(rb.scene_index, rb.episode_index, rb.q_index);
  });

  fs::create_directories(info.dir);
  std::ofstream out(fs::path(info.dir) / "dataset.jsonl", std::ios::binary);
  if (!out) throw IoError("cannot write dataset.jsonl under " + info.dir);

  DatasetManifest manifest;
  manifest.generator_version = info.generator_version;
  manifest.master_seed = info.master_seed;
  manifest.catalog_hash = info.catalog_hash;
  manifest.scenes_requested = info.scenes_requested;
  manifest.scenes_generated = info.scenes_generated;
  manifest.scenes_failed = info.scenes_failed;

  std::set<std::string> referenced;
  for (size_t i : order) {
    const QARecord& r = records[i];
    // Oracle-closure check at export time: the stored derivation must
    // reproduce the gold.
    const std::string recomputed = recompute_gold(r.task, r.derivation);
    if (recomputed != r.gold) {
      throw DerivationMismatch("export: derivation of " + r.record_id + " yields '" + recomputed +
                               "', gold is '" + r.gold + "'");
    }
    std::vector<std::string> choices = r.choices;
    std::vector<int> perm = r.choice_perm;
    int gold_index = r.gold_index;
    if (perm.empty() && choices.size() >= 2) {
      perm.resize(choices.size());
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(r.seed_path.master_seed,
                          {kShuffleStream, static_cast<uint64_t>(r.scene_index),
                           static_cast<uint64_t>(r.episode_index),
                           static_cast<uint64_t>(r.q_index)}));
      rng.shuffle(perm);
      for (size_t k = 0; k < perm.size(); ++k) {
        choices[k] = r.choices[static_cast<size_t>(perm[k])];
        if (perm[k] == r.gold_index) gold_index = static_cast<int>(k);
      }
    }
    if (!choices.empty() &&
        (gold_index < 0 || gold_index >= static_cast<int>(choices.size()) ||
         choices[static_cast<size_t>(gold_index)] != r.gold)) {
      throw DerivationMismatch("export: gold_index of " + r.record_id + " is inconsistent");
    }
    out << record_json(r, choices, gold_index, perm).dump() << "\n";
    for (const auto& fr : r.frame_refs) referenced.insert(fr);
    auto& c = manifest.counts[task_name(r.task)];
    if (r.split == "test") ++c[1];
    else ++c[0];
    ++c[2];
    ++manifest.records_total;
  }
  out.close();

  std::ofstream fout(fs::path(info.dir) / "frames.jsonl", std::ios::binary);
  if (!fout) throw IoError("cannot write frames.jsonl under " + info.dir);
  for (const Frame& f : frames) {
    if (!referenced.count(f.frame_id)) continue;
    fout << frame_json(f).dump() << "\n";
    ++manifest.frames_total;
  }
  fout.close();

  std::ofstream mout(fs::path(info.dir) / "manifest.json", std::ios::binary);
  if (!mout) throw IoError("cannot write manifest.json under " + info.dir);
  mout << manifest_json(manifest).dump(2) << "\n";
  mout.close();
  return manifest;
}

DatasetBundle load_dataset(const std::string& dir) {
  DatasetBundle bundle;
  std::ifstream in(fs::path(dir) / "dataset.jsonl");
  if (!in) throw IoError("cannot open dataset.jsonl under " + dir);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    bundle.records.push_back(record_from_json(json::parse(line)));
  }
  std::ifstream fin(fs::path(dir) / "frames.jsonl");
  if (!fin) throw IoError("cannot open frames.jsonl under " + dir);
  while (std::getline(fin, line)) {
    if (line.empty()) continue;
    bundle.frames.push_back(frame_from_json(json::parse(line)));
  }
  std::ifstream min(fs::path(dir) / "manifest.json");
  if (!min) throw IoError("cannot open manifest.json under " + dir);
  std::stringstream ss;
  ss << min.rdbuf();
  bundle.manifest = manifest_from_json(json::parse(ss.str()));
  return bundle;
}

Stats compute_stats(const std::vector<QARecord>& records) {
  Stats stats;
  for (const auto& r : records) {
    TaskStats& t = stats[task_name(r.task)];
    ++t.total;
    ++t.answer_class_counts[r.answer_class];
    ++t.choice_count_hist[static_cast<int>(r.choices.size())];
  }
  return stats;
}

std::string stats_text(const Stats& stats) {
  std::ostringstream out;
  out << "== answer statistics ==\n";
  for (const auto& [task, t] : stats) {
    out << task << ": " << t.total << " records\n";
    for (const auto& [n, c] : t.choice_count_hist) {
      out << "  " << n << " choices: " << c << "\n";
    }
    for (const auto& [cls, c] : t.answer_class_counts) {
      char pct[16];
      std::snprintf(pct, sizeof(pct), "%.1f", t.total ? 100.0 * c / t.total : 0.0);
      out << "  answer '" << cls << "': " << c << " (" << pct << "%)\n";
    }
  }
  return out.str();
}

nlohmann::ordered_json stats_json(const Stats& stats) {
  json j;
  for (const auto& [task, t] : stats) {
    json tj;
    tj["total"] = t.total;
    json cc;
    for (const auto& [n, c] : t.choice_count_hist) cc[std::to_string(n)] = c;
    tj["choice_counts"] = cc;
    json ac;
    for (const auto& [cls, c] : t.answer_class_counts) ac[cls] = c;
    tj["answer_classes"] = ac;
    j[task] = tj;
  }
  return j;
}

}  // namespace spatialqa
