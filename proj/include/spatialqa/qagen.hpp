#pragma once

// Question generators for the eight task families. Every draft carries a
// derivation blob holding the exact numeric inputs the gold was decided
// from; recompute_gold() re-derives the answer from nothing else, which is
// what the oracle answerer and the export-time closure check run.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/simulator.hpp"

namespace spatialqa {

enum class TaskType {
  RelSpatial,
  RelDepth,
  Count,
  EgoMove,
  ObjMove,
  Perspective,
  GoalAim,
  ActionConsequence,
  Precise3D,
};

constexpr int kTaskCount = 9;

const char* task_name(TaskType t);        // "rel_spatial", ...
const char* task_short_name(TaskType t);  // "RelSp", "EgoM", ...
std::optional<TaskType> parse_task(const std::string& name);
bool is_dynamic_task(TaskType t);  // the five action-based families

struct QADraft {
  TaskType task;
  std::vector<std::string> frame_refs;  // filled by the pipeline
  std::string question;
  std::string gold;
  std::vector<std::string> distractors;  // empty for Precise3D
  std::string answer_class;              // canonical label for balancing/stats
  nlohmann::ordered_json derivation;
};

struct QAGenParams {
  double tie_eps{0.02};        // meters, lateral/depth/distance tie band
  double vertical_gap{0.15};   // meters, required height gap for above/below
  double aim_eps{10.0};        // degrees, the "roughly straight" band
  double dominant_ratio{1.5};  // axis-dominance required for object movement
  double precise_tolerance{0.005};  // meters per component
};

// -- static families ---------------------------------------------------------

std::vector<QADraft> gen_rel_spatial(const Scene& scene, Rng& rng, const QAGenParams& params,
                                     int max_lateral, int max_vertical, int max_closer_of_two,
                                     double min_visible_px);
std::vector<QADraft> gen_rel_depth(const Scene& scene, Rng& rng, const QAGenParams& params,
                                   int max_n, double min_visible_px);
std::vector<QADraft> gen_count(const Scene& scene, Rng& rng, const QAGenParams& params, int max_n,
                               double min_visible_px);

// -- dynamic families --------------------------------------------------------

QADraft gen_ego_move(const ActionTrace& trace, Rng& rng);
std::optional<QADraft> gen_obj_move(const Scene& pre_state, const Scene& post_state,
                                    const std::string& moved_id, Rng& rng,
                                    const QAGenParams& params, double min_visible_px);
std::vector<QADraft> gen_perspective(const Scene& scene, const Pixel& mark,
                                     const Scene& post_teleport, bool turned_right, Rng& rng,
                                     const QAGenParams& params, int max_lateral, int max_depth,
                                     double min_visible_px);
std::vector<QADraft> gen_goal_aim(const Scene& scene, Rng& rng, const QAGenParams& params,
                                  int max_n, double min_visible_px);
std::vector<QADraft> gen_action_consequence(const Scene& scene, const ActionTrace& trace, Rng& rng,
                                            const QAGenParams& params, int max_n,
                                            double min_visible_px);
std::vector<QADraft> gen_precise3d(const Scene& scene, Rng& rng, const QAGenParams& params,
                                   int max_n, double min_visible_px);

// -- shared helpers ----------------------------------------------------------

/// "the <chosen phrase>", or empty when the mention would be ambiguous among
/// the visible objects (class not unique and phrase shared).
std::optional<std::string> unambiguous_mention(const Scene& scene,
                                               const std::vector<Visibility>& visible,
                                               size_t object_index);

/// Canonical text of an egocentric action sequence, past tense
/// ("rotated left by 30 degrees and moved forward").
std::string describe_trace_past(bool turned_right, double degrees, bool moved_forward);
/// Same sequence in first-person present ("rotate left by 30 degrees and
/// move forward"), used inside consequence questions.
std::string describe_trace_present(bool turned_right, double degrees, bool moved_forward);

/// Formats a camera-normalized location as the canonical precise-3D answer,
/// e.g. "(0.00, 0.50, 2.00)".
std::string format_triple(double x, double y, double z);
/// Parses text of the canonical triple form; empty on malformed input.
std::optional<Vec3> parse_triple(const std::string& text);

/// Recomputes the gold answer text from a derivation blob alone. Throws
/// DerivationMismatch when the blob is malformed or lands in a tie region
/// that generation should have discarded.
std::string recompute_gold(TaskType task, const nlohmann::ordered_json& derivation);

}  // namespace spatialqa
