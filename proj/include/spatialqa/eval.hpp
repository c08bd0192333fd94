#pragma once

// Scoring harness: oracle / random / fixed-position answerers, a remote
// endpoint client, prompt construction, and accuracy reporting.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/dataset.hpp"

namespace spatialqa {

/// The conversation prefix prepended to every prompt.
extern const char* const kPromptPrefix;

struct PromptSpec {
  enum class OptionMode { TextOptions, LetterOptions };
  OptionMode mode{OptionMode::TextOptions};
  std::string system_prefix{kPromptPrefix};
};

/// Renders the full prompt: prefix, "###Human:" with one <image> token per
/// frame inside a single <im_start>/<im_end> pair, the question, the answer
/// options, and the trailing "###Assistant:".
std::string build_prompt(const QARecord& record, const PromptSpec& spec);

struct Answer {
  int choice_index{-1};
  std::optional<Vec3> triple;  // Precise3D answers
  bool unparseable{false};
  std::string raw;
};

class Answerer {
 public:
  virtual ~Answerer() = default;
  virtual std::string name() const = 0;
  virtual Answer answer(const QARecord& record, const std::vector<const Frame*>& frames) = 0;
  /// Upper bound on concurrent in-flight answer() calls.
  virtual int max_parallel() const { return 1; }
};

/// Recomputes the gold from the derivation blob and returns its index under
/// the record's shuffled choices. Throws DerivationMismatch when the
/// derivation does not reproduce a presented option.
class OracleAnswerer : public Answerer {
 public:
  std::string name() const override { return "oracle"; }
  Answer answer(const QARecord& record, const std::vector<const Frame*>& frames) override;
  int max_parallel() const override { return 8; }
};

/// Uniform over the presented choices. Predictions are keyed to the record
/// id, not the call order, so scoring is order-invariant.
class RandomAnswerer : public Answerer {
 public:
  explicit RandomAnswerer(uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  Answer answer(const QARecord& record, const std::vector<const Frame*>& frames) override;
  int max_parallel() const override { return 8; }

 private:
  uint64_t seed_;
};

/// Always answers the same presented position; a shuffle-correctness probe.
class FixedAnswerer : public Answerer {
 public:
  explicit FixedAnswerer(int index) : index_(index) {}
  std::string name() const override { return "fixed"; }
  Answer answer(const QARecord& record, const std::vector<const Frame*>& frames) override;
  int max_parallel() const override { return 8; }

 private:
  int index_;
};

struct EndpointConfig {
  std::string host{"127.0.0.1"};
  int port{8080};
  std::string path{"/answer"};
  double timeout_s{30.0};
  int retries{2};
  std::string auth_header;  // full "Name: value" line, usually from the env
  int max_in_flight{4};
  PromptSpec prompt;
};

/// Sends one request per record ({prompt, question, choices, base64 SVG
/// frames}) and parses the reply by longest exact choice match with a
/// letter-option fallback. Throws TransportError after the configured
/// retries; unparseable replies come back flagged and score as incorrect.
class RemoteAnswerer : public Answerer {
 public:
  explicit RemoteAnswerer(EndpointConfig config) : config_(std::move(config)) {}
  std::string name() const override { return "remote"; }
  Answer answer(const QARecord& record, const std::vector<const Frame*>& frames) override;
  int max_parallel() const override { return config_.max_in_flight; }

 private:
  EndpointConfig config_;
};

/// Longest case-insensitive exact choice-text match in the response, falling
/// back to a standalone option letter (A-D...). Returns -1 when nothing
/// matches.
int parse_choice_from_text(const std::string& response, const std::vector<std::string>& choices);

struct TaskAccuracy {
  int total{0};
  int correct{0};
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct RecordVerdict {
  std::string record_id;
  std::string task;
  int predicted{-1};
  int gold{-1};
  bool correct{false};
  std::string status;  // ok | unparseable | transport_error | skipped
};

struct EvalReport {
  std::string answerer;
  std::map<std::string, TaskAccuracy> per_task;  // task name -> accuracy
  double overall{0.0};  // mean of per-task accuracies, Precise3D excluded
  std::map<std::string, std::map<int, int>> prediction_hist;  // task -> index -> n
  std::vector<RecordVerdict> verdicts;
  int transport_errors{0};
  int unparseable{0};
  int skipped{0};
};

/// Scores every record. Remote answerers run under a bounded worker pool
/// (answerer.max_parallel()); results are keyed by record so the report does
/// not depend on completion order. After 5 consecutive transport failures
/// the remaining records are marked skipped and scoring stops early.
EvalReport score(const std::vector<QARecord>& records, const std::vector<Frame>& frames,
                 Answerer& answerer);

std::string report_text(const EvalReport& report);
nlohmann::ordered_json report_json(const EvalReport& report);

/// Blocking stub endpoint: POST /answer replies with the first presented
/// choice. Used by tests and available on the CLI for smoke-testing the
/// remote client.
int run_stub_server(const std::string& host, int port);

}  // namespace spatialqa
