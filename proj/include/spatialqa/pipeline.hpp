#pragma once

// End-to-end generation: scenes -> episodes -> QA drafts -> balance ->
// split -> export (+ optional renders). Scene work is parallel across a
// worker pool; every random stream is derived from (master_seed, indices),
// so output is byte-identical for any worker count.

#include <string>

#include "spatialqa/dataset.hpp"
#include "spatialqa/eval.hpp"

namespace spatialqa {

extern const char* const kGeneratorVersion;

/// Per-scene generation quotas (raw drafts, before balancing).
struct PerSceneQuotas {
  int rel_lateral{3};
  int rel_vertical{2};
  int rel_closer{2};
  int rel_depth{3};
  int count{3};
  int ego_traces{3};
  int obj_moves{3};
  int perspective_episodes{2};
  int perspective_lateral{2};   // per episode
  int perspective_depth{1};     // per episode
  int goal_aim{3};
  int consequence_traces{3};
  int consequence_per_trace{2};
  int precise3d{2};
};

struct RunConfig {
  uint64_t master_seed{7};
  int scenes{100};
  int workers{1};
  std::string out_dir{"out"};
  std::string catalog_path;  // empty: built-in catalog
  bool render{false};
  double test_frac{0.2};
  GenParams gen;
  SimParams sim;
  QAGenParams qa;
  PerSceneQuotas per_scene;
  BalancePolicy balance_policy;  // seed 0 means "derive from master_seed"

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::ordered_json& j);  // partial override of defaults
};

struct SceneOutput {
  bool ok{false};
  std::string failure;
  std::vector<QARecord> records;
  std::vector<Frame> frames;
};

/// Generates one scene's episodes and QA records. Pure function of
/// (config, scene_index); safe to call from any worker.
SceneOutput generate_scene_records(const RunConfig& config, const Catalog& catalog,
                                   int scene_index);

struct GenerateResult {
  DatasetManifest manifest;
  std::string manifest_path;
  int scenes_failed{0};
};

/// Runs the whole pipeline and writes the dataset under config.out_dir.
GenerateResult run_generate(const RunConfig& config);

/// Static-partition-free parallel loop with an atomic cursor.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace spatialqa
