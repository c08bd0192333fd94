// Command-line entry point: generate, stats, render, eval, serve-stub.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spatialqa/errors.hpp"
#include "spatialqa/eval.hpp"
#include "spatialqa/pipeline.hpp"
#include "spatialqa/render.hpp"

namespace fs = std::filesystem;
using namespace spatialqa;

namespace {

nlohmann::ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return nlohmann::ordered_json::parse(ss.str());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

int cmd_generate(const std::string& config_path, uint64_t seed, bool seed_set, int scenes,
                 const std::string& out_dir, int workers, bool render,
                 const std::string& catalog, double test_frac, bool test_frac_set) {
  RunConfig config;
  if (!config_path.empty()) config = RunConfig::from_json(read_json_file(config_path));
  if (seed_set) config.master_seed = seed;
  if (scenes > 0) config.scenes = scenes;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (workers > 0) config.workers = workers;
  if (render) config.render = true;
  if (!catalog.empty()) config.catalog_path = catalog;
  if (test_frac_set) config.test_frac = test_frac;
  if (config.test_frac <= 0.0 || config.test_frac >= 1.0) {
    std::cerr << "generate: test_frac must be in (0, 1)\n";
    return 1;
  }
  if (fs::exists(fs::path(config.out_dir) / "manifest.json")) {
    std::cerr << "generate: " << config.out_dir
              << " already holds a dataset; pick a fresh output directory\n";
    return 1;
  }
  const GenerateResult result = run_generate(config);
  std::cout << "wrote " << result.manifest_path << "\n";
  std::cout << "records: " << result.manifest.records_total
            << ", frames: " << result.manifest.frames_total
            << ", scenes failed: " << result.scenes_failed << "\n";
  for (const auto& [task, c] : result.manifest.counts) {
    std::cout << "  " << task << ": train " << c[0] << ", test " << c[1] << ", total " << c[2]
              << "\n";
  }
  return 0;
}

int cmd_stats(const std::string& dataset_dir, std::string out_dir) {
  const DatasetBundle bundle = load_dataset(dataset_dir);
  const Stats stats = compute_stats(bundle.records);
  if (out_dir.empty()) out_dir = dataset_dir;
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "stats.txt").string(), stats_text(stats));
  write_text_file((fs::path(out_dir) / "stats.json").string(), stats_json(stats).dump(2) + "\n");
  std::cout << stats_text(stats);
  std::cout << "wrote " << (fs::path(out_dir) / "stats.json").string() << "\n";
  return 0;
}

int cmd_render(const std::string& dataset_dir, std::string out_dir) {
  const DatasetBundle bundle = load_dataset(dataset_dir);
  if (out_dir.empty()) out_dir = (fs::path(dataset_dir) / "frames").string();
  write_frame_svgs(bundle.frames, out_dir);
  std::cout << "wrote " << bundle.frames.size() << " renders under " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& dataset_dir, const std::string& answerer_name, uint64_t seed,
             int fixed_index, const EndpointConfig& endpoint, std::string out_dir,
             const std::string& split) {
  DatasetBundle bundle = load_dataset(dataset_dir);
  if (!split.empty()) {
    std::vector<QARecord> filtered;
    for (auto& r : bundle.records) {
      if (r.split == split) filtered.push_back(std::move(r));
    }
    bundle.records = std::move(filtered);
  }

  std::unique_ptr<Answerer> answerer;
  if (answerer_name == "oracle") {
    answerer = std::make_unique<OracleAnswerer>();
  } else if (answerer_name == "random") {
    answerer = std::make_unique<RandomAnswerer>(seed);
  } else if (answerer_name == "fixed") {
    answerer = std::make_unique<FixedAnswerer>(fixed_index);
  } else if (answerer_name == "remote") {
    answerer = std::make_unique<RemoteAnswerer>(endpoint);
  } else {
    std::cerr << "eval: unknown answerer '" << answerer_name << "'\n";
    return 1;
  }

  if (out_dir.empty()) out_dir = (fs::path(dataset_dir) / ("eval_" + answerer_name)).string();
  fs::create_directories(out_dir);
  const EvalReport report = score(bundle.records, bundle.frames, *answerer);
  write_text_file((fs::path(out_dir) / "report.txt").string(), report_text(report));
  write_text_file((fs::path(out_dir) / "report.json").string(),
                  report_json(report).dump(2) + "\n");
  std::cout << report_text(report);
  std::cout << "wrote " << (fs::path(out_dir) / "report.json").string() << "\n";
  if (report.transport_errors > 0 || report.skipped > 0) {
    std::cerr << "eval: " << report.transport_errors << " transport errors, " << report.skipped
              << " records skipped; partial results preserved\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatialqa: metadata-level scene simulation, spatial QA generation and evaluation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a dataset");
  std::string g_config, g_out, g_catalog;
  uint64_t g_seed = 0;
  int g_scenes = 0, g_workers = 0;
  bool g_render = false;
  double g_test_frac = 0.0;
  gen->add_option("--config", g_config, "JSON config file (flags override it)");
  auto* seed_opt = gen->add_option("--seed", g_seed, "master seed");
  gen->add_option("--scenes", g_scenes, "number of scenes");
  gen->add_option("--out", g_out, "output directory");
  gen->add_option("--workers", g_workers, "worker threads");
  gen->add_flag("--render", g_render, "write schematic SVG renders");
  gen->add_option("--catalog", g_catalog, "asset catalog (JSONL); built-in when omitted");
  auto* tf_opt = gen->add_option("--test-frac", g_test_frac, "test split fraction");

  // stats
  auto* stats = app.add_subcommand("stats", "answer-distribution histograms for a dataset");
  std::string s_dataset, s_out;
  stats->add_option("--dataset", s_dataset, "dataset directory")->required();
  stats->add_option("--out", s_out, "report directory (default: dataset dir)");

  // render
  auto* render = app.add_subcommand("render", "render frames of an existing dataset");
  std::string r_dataset, r_out;
  render->add_option("--dataset", r_dataset, "dataset directory")->required();
  render->add_option("--out", r_out, "output directory (default: <dataset>/frames)");

  // eval
  auto* eval = app.add_subcommand("eval", "score an answerer on a dataset");
  std::string e_dataset, e_answerer = "oracle", e_out, e_split;
  uint64_t e_seed = 1234;
  int e_fixed = 0;
  EndpointConfig endpoint;
  bool e_letters = false;
  eval->add_option("--dataset", e_dataset, "dataset directory")->required();
  eval->add_option("--answerer", e_answerer, "oracle | random | fixed | remote");
  eval->add_option("--seed", e_seed, "random answerer seed");
  eval->add_option("--fixed-index", e_fixed, "choice position for the fixed answerer");
  eval->add_option("--split", e_split, "restrict to a split (train|test)");
  eval->add_option("--out", e_out, "report directory");
  eval->add_option("--host", endpoint.host, "remote endpoint host");
  eval->add_option("--port", endpoint.port, "remote endpoint port");
  eval->add_option("--path", endpoint.path, "remote endpoint path");
  eval->add_option("--timeout", endpoint.timeout_s, "request timeout seconds");
  eval->add_option("--retries", endpoint.retries, "transport retries per record");
  eval->add_option("--max-in-flight", endpoint.max_in_flight, "bounded request pool size");
  eval->add_flag("--letter-options", e_letters, "render options as letters in prompts");

  // serve-stub
  auto* stub = app.add_subcommand("serve-stub", "run the bundled echo endpoint");
  std::string st_host = "127.0.0.1";
  int st_port = 8089;
  stub->add_option("--host", st_host, "bind address");
  stub->add_option("--port", st_port, "bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(g_config, g_seed, seed_opt->count() > 0, g_scenes, g_out, g_workers,
                          g_render, g_catalog, g_test_frac, tf_opt->count() > 0);
    }
    if (stats->parsed()) return cmd_stats(s_dataset, s_out);
    if (render->parsed()) return cmd_render(r_dataset, r_out);
    if (eval->parsed()) {
      if (e_letters) endpoint.prompt.mode = PromptSpec::OptionMode::LetterOptions;
      if (const char* auth = std::getenv("SPATIALQA_ENDPOINT_AUTH")) {
        endpoint.auth_header = auth;
      }
      return cmd_eval(e_dataset, e_answerer, e_seed, e_fixed, endpoint, e_out, e_split);
    }
    if (stub->parsed()) {
      std::cout << "stub endpoint listening on " << st_host << ":" << st_port << "\n";
      return run_stub_server(st_host, st_port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
