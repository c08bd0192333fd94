#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "spatialqa/errors.hpp"
#include "spatialqa/eval.hpp"
#include "spatialqa/pipeline.hpp"

using namespace spatialqa;
namespace fs = std::filesystem;

#ifndef FIXTURES_DIR
#define FIXTURES_DIR "tests/fixtures"
#endif

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

QARecord fixture_record() {
  QARecord r;
  r.record_id = "fx";
  r.task = TaskType::RelDepth;
  r.question = "Is the person facing the frisbee?";
  r.choices = {"yes", "no"};
  r.gold_index = 0;
  r.gold = "yes";
  r.frame_refs = {"f0"};
  return r;
}

/// Generates a small dataset once and caches it for the eval tests.
const DatasetBundle& small_dataset() {
  static DatasetBundle bundle = [] {
    RunConfig config;
    config.master_seed = 424242;
    config.scenes = 60;
    config.out_dir = "/tmp/spatialqa_eval_ds";
    fs::remove_all(config.out_dir);
    run_generate(config);
    return load_dataset(config.out_dir);
  }();
  return bundle;
}

}  // namespace

TEST_CASE("build_prompt matches the stored fixtures byte for byte") {
  PromptSpec spec;
  CHECK(build_prompt(fixture_record(), spec) ==
        slurp(fs::path(FIXTURES_DIR) / "prompt_single.txt"));

  QARecord two = fixture_record();
  two.question = "How did the camera taking the video likely move?";
  two.choices = {"rotated left by 30 degrees", "rotated right by 30 degrees",
                 "rotated left by 50 degrees", "rotated left by 30 degrees and moved forward"};
  two.frame_refs = {"f0", "f1"};
  CHECK(build_prompt(two, spec) == slurp(fs::path(FIXTURES_DIR) / "prompt_two_image.txt"));
}

TEST_CASE("build_prompt structure: image block, options, letter mode") {
  PromptSpec spec;
  const std::string p = build_prompt(fixture_record(), spec);
  CHECK(p.find("###Human: <im_start><image><im_end>") != std::string::npos);
  CHECK(p.rfind("###Assistant:") == p.size() - 13);
  CHECK(p.find("Choose between the following options: yes, or no.") != std::string::npos);

  QARecord two = fixture_record();
  two.frame_refs = {"f0", "f1"};
  CHECK(build_prompt(two, spec).find("<im_start><image><image><im_end>") != std::string::npos);

  spec.mode = PromptSpec::OptionMode::LetterOptions;
  CHECK(build_prompt(fixture_record(), spec).find("A. yes, or B. no.") != std::string::npos);

  QARecord precise = fixture_record();
  precise.task = TaskType::Precise3D;
  precise.choices.clear();
  spec.mode = PromptSpec::OptionMode::TextOptions;
  CHECK(build_prompt(precise, spec).find("Choose between") == std::string::npos);
}

TEST_CASE("parse_choice_from_text: substring, longest match, letters") {
  CHECK(parse_choice_from_text("The answer is left.", {"left", "right"}) == 0);
  CHECK(parse_choice_from_text("I believe it moved to the right", {"left", "right"}) == 1);
  CHECK(parse_choice_from_text("the red mug moved to the left",
                               {"the red mug moved closer", "the red mug moved to the left"}) ==
        1);
  CHECK(parse_choice_from_text("B", {"yes", "no"}) == 1);
  CHECK(parse_choice_from_text("Option (b).", {"yes", "no"}) == 1);
  CHECK(parse_choice_from_text("I cannot tell.", {"left", "right"}) == -1);
  // "a" inside a word does not count as a letter option.
  CHECK(parse_choice_from_text("unclear", {"up", "down"}) == -1);
}

TEST_CASE("oracle scores 100% on a generated dataset") {
  const DatasetBundle& bundle = small_dataset();
  REQUIRE(bundle.records.size() > 600);
  OracleAnswerer oracle;
  const EvalReport report = score(bundle.records, bundle.frames, oracle);
  for (const auto& [task, acc] : report.per_task) {
    INFO(task);
    CHECK(acc.correct == acc.total);
  }
  CHECK(report.overall == 1.0);
}

TEST_CASE("oracle flags corrupted derivations") {
  DatasetBundle bundle = small_dataset();
  auto records = bundle.records;
  for (auto& r : records) {
    if (r.task == TaskType::RelSpatial && r.derivation["kind"] == "lateral") {
      r.derivation["a"] = r.derivation["b"];  // force a tie
      OracleAnswerer oracle;
      CHECK_THROWS_AS(score({r}, bundle.frames, oracle), DerivationMismatch);
      return;
    }
  }
  FAIL("no lateral record found");
}

TEST_CASE("random answerer is near chance and order-invariant") {
  const DatasetBundle& bundle = small_dataset();
  std::vector<QARecord> two_choice;
  for (const auto& r : bundle.records) {
    if (r.choices.size() == 2) two_choice.push_back(r);
  }
  REQUIRE(two_choice.size() > 100);
  // Inflate by cloning across distinct ids to tighten the Monte Carlo bound.
  std::vector<QARecord> many;
  for (int k = 0; k < 20; ++k) {
    for (auto r : two_choice) {
      r.record_id += "_" + std::to_string(k);
      many.push_back(std::move(r));
    }
  }
  RandomAnswerer rnd(2024);
  const EvalReport a = score(many, bundle.frames, rnd);
  int total = 0;
  int correct = 0;
  for (const auto& [task, acc] : a.per_task) {
    (void)task;
    total += acc.total;
    correct += acc.correct;
  }
  const double acc = static_cast<double>(correct) / total;
  CHECK(acc > 0.47);
  CHECK(acc < 0.53);

  // Permuting the record order leaves the report unchanged.
  std::vector<QARecord> reversed(many.rbegin(), many.rend());
  const EvalReport b = score(reversed, bundle.frames, rnd);
  for (const auto& [task, accs] : a.per_task) {
    CHECK(b.per_task.at(task).correct == accs.correct);
    CHECK(b.per_task.at(task).total == accs.total);
  }
}

TEST_CASE("fixed answerer lands near uniform because choices are shuffled") {
  const DatasetBundle& bundle = small_dataset();
  std::vector<QARecord> choice_records;
  for (const auto& r : bundle.records) {
    if (!r.choices.empty()) choice_records.push_back(r);
  }
  FixedAnswerer fixed(0);
  const EvalReport report = score(choice_records, bundle.frames, fixed);
  double expected = 0.0;
  int total = 0;
  int correct = 0;
  for (const auto& r : choice_records) expected += 1.0 / static_cast<double>(r.choices.size());
  expected /= static_cast<double>(choice_records.size());
  for (const auto& [task, acc] : report.per_task) {
    (void)task;
    total += acc.total;
    correct += acc.correct;
  }
  const double acc = static_cast<double>(correct) / total;
  CHECK(std::fabs(acc - expected) < 0.05);
}

TEST_CASE("remote answerer against an in-process stub") {
  const DatasetBundle& bundle = small_dataset();
  std::vector<QARecord> sample;
  for (const auto& r : bundle.records) {
    if (!r.choices.empty() && sample.size() < 60) sample.push_back(r);
  }

  httplib::Server server;
  server.Post("/answer", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    REQUIRE(body.contains("prompt"));
    REQUIRE(body.contains("images"));
    const auto& choices = body.at("choices");
    const std::string answer =
        choices.empty() ? "(0.00, 0.00, 0.00)" : choices[0].get<std::string>();
    res.set_content(nlohmann::json{{"answer", answer}}.dump(), "application/json");
  });
  server.Post("/gibberish", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"answer", "zzz qqq"}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig config;
  config.port = port;
  config.timeout_s = 5.0;
  RemoteAnswerer remote(config);
  const EvalReport report = score(sample, bundle.frames, remote);
  CHECK(report.transport_errors == 0);
  CHECK(report.skipped == 0);
  // The stub always picks the first presented choice.
  for (const auto& v : report.verdicts) CHECK(v.predicted == 0);

  // Unparseable responses score as incorrect but are not errors.
  EndpointConfig bad_cfg = config;
  bad_cfg.path = "/gibberish";
  RemoteAnswerer gibberish(bad_cfg);
  std::vector<QARecord> few(sample.begin(), sample.begin() + 5);
  const EvalReport junk = score(few, bundle.frames, gibberish);
  CHECK(junk.unparseable == 5);
  for (const auto& [task, acc] : junk.per_task) {
    (void)task;
    CHECK(acc.correct == 0);
  }

  server.stop();
  listener.join();

  // Unreachable endpoint: transport errors, early stop, partial results.
  EndpointConfig dead = config;
  dead.retries = 0;
  dead.timeout_s = 1.0;
  RemoteAnswerer unreachable(dead);
  const EvalReport failed = score(sample, bundle.frames, unreachable);
  CHECK(failed.transport_errors >= 5);
  CHECK(failed.transport_errors + failed.skipped == static_cast<int>(sample.size()));
}

TEST_CASE("report text carries the table layout") {
  const DatasetBundle& bundle = small_dataset();
  OracleAnswerer oracle;
  const EvalReport report = score(bundle.records, bundle.frames, oracle);
  const std::string text = report_text(report);
  CHECK(text.find("EgoM") != std::string::npos);
  CHECK(text.find("ObjM") != std::string::npos);
  CHECK(text.find("EgoAct") != std::string::npos);
  CHECK(text.find("Aim") != std::string::npos);
  CHECK(text.find("Pers") != std::string::npos);
  CHECK(text.find("Avg") != std::string::npos);
  CHECK(text.find("Prec3D") != std::string::npos);
}
