#pragma once

// Record finalization, balancing, scene-disjoint splitting, and bit-exact
// line-delimited export. Everything here is deterministic in (records,
// seeds): the same inputs always serialize to the same bytes.

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/qagen.hpp"

namespace spatialqa {

struct SeedPath {
  uint64_t master_seed{0};
  int scene_index{0};
  int episode_index{0};
};

struct QARecord {
  std::string record_id;
  TaskType task{TaskType::RelSpatial};
  std::string scene_id;
  int scene_index{0};
  int episode_index{0};
  int q_index{0};
  std::vector<std::string> frame_refs;  // 1-2 frame ids
  std::string question;
  // Before export: choices[0] is the gold. Export shuffles with the record's
  // derived stream and stores the permutation; loaded records come back
  // shuffled with gold_index/choice_perm filled.
  std::vector<std::string> choices;  // empty for Precise3D
  int gold_index{0};                 // -1 for Precise3D
  std::string gold;                  // gold answer text
  std::string answer_class;
  std::string split;  // "", "train" or "test"
  std::vector<int> choice_perm;  // shuffled[i] = unshuffled[choice_perm[i]]
  SeedPath seed_path;
  nlohmann::ordered_json derivation;
};

/// Test-set task mix from the reference benchmark composition; used as
/// proportional targets for the dynamic families.
const std::map<TaskType, double>& default_mix_weights();

struct BalancePolicy {
  double max_class_frac{0.6};
  bool proportional_dynamic_mix{true};
  std::map<TaskType, int> quotas;  // absolute per-task caps; override the mix
  uint64_t seed{0};
  std::map<TaskType, double> mix_weights{default_mix_weights()};
};

/// Applies gold-class caps and per-task quotas / proportional subsampling.
/// Deterministic in (records, policy); reapplying the result is a no-op.
std::vector<QARecord> balance(std::vector<QARecord> records, const BalancePolicy& policy);

/// Scene-disjoint train/test assignment. Scenes are drawn into the test set
/// in a seeded order with a greedy mix-tracking rule so that per-task test
/// proportions stay close to the overall proportions at any scale.
void split_records(std::vector<QARecord>& records, double test_frac, uint64_t seed,
                   const std::map<TaskType, double>& mix_weights = default_mix_weights());

struct DatasetManifest {
  std::string generator_version;
  uint64_t master_seed{0};
  std::string catalog_hash;
  int scenes_requested{0};
  int scenes_generated{0};
  int scenes_failed{0};
  int records_total{0};
  int frames_total{0};
  // task name -> {train, test, total}
  std::map<std::string, std::array<int, 3>> counts;
};

nlohmann::ordered_json manifest_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::ordered_json& j);

struct ExportInfo {
  std::string dir;
  std::string generator_version;
  uint64_t master_seed{0};
  std::string catalog_hash;
  int scenes_requested{0};
  int scenes_generated{0};
  int scenes_failed{0};
};

/// Writes dataset.jsonl (choice order shuffled per record), frames.jsonl
/// (only frames still referenced), and manifest.json. Records are written in
/// (scene_index, episode_index, q_index) order; floats round-trip exactly.
/// Every record's gold is recomputed from its derivation before writing and
/// a DerivationMismatch aborts the export. Returns the manifest.
DatasetManifest export_dataset(const std::vector<QARecord>& records,
                               const std::vector<Frame>& frames, const ExportInfo& info);

struct DatasetBundle {
  std::vector<QARecord> records;
  std::vector<Frame> frames;
  DatasetManifest manifest;
};

DatasetBundle load_dataset(const std::string& dir);

Frame frame_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json frame_json(const Frame& f);

// -- answer statistics -------------------------------------------------------

struct TaskStats {
  int total{0};
  std::map<std::string, int> answer_class_counts;
  std::map<int, int> choice_count_hist;
};

using Stats = std::map<std::string, TaskStats>;  // keyed by task name

Stats compute_stats(const std::vector<QARecord>& records);
std::string stats_text(const Stats& stats);
nlohmann::ordered_json stats_json(const Stats& stats);

}  // namespace spatialqa
