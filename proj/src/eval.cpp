#include "spatialqa/eval.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "spatialqa/errors.hpp"
#include "spatialqa/render.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

const char* const kPromptPrefix =
    "A chat between a curious human and an artificial intelligence assistant. "
    "The assistant gives helpful, detailed, and polite answers to the human's questions.";

namespace {

using json = nlohmann::ordered_json;

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string base64_encode(const std::string& in) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 2 < in.size()) {
    const uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                       (static_cast<unsigned char>(in[i + 1]) << 8) |
                       static_cast<unsigned char>(in[i + 2]);
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(tbl[(v >> 6) & 63]);
    out.push_back(tbl[v & 63]);
    i += 3;
  }
  if (i + 1 == in.size()) {
    const uint32_t v = static_cast<unsigned char>(in[i]) << 16;
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == in.size()) {
    const uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                       (static_cast<unsigned char>(in[i + 1]) << 8);
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(tbl[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string join_options(const std::vector<std::string>& options, bool letters) {
  std::string out;
  for (size_t i = 0; i < options.size(); ++i) {
    std::string item = options[i];
    if (letters) item = std::string(1, static_cast<char>('A' + i)) + ". " + item;
    if (i == 0) {
      out = item;
    } else if (i + 1 == options.size()) {
      out += ", or " + item;
    } else {
      out += ", " + item;
    }
  }
  return out;
}

/// Scans a free-form response for three decimal numbers.
std::optional<Vec3> scan_triple(const std::string& text) {
  if (auto t = parse_triple(text)) return t;
  std::vector<double> nums;
  const char* p = text.c_str();
  char* end = nullptr;
  while (*p && nums.size() < 3) {
    if ((*p >= '0' && *p <= '9') || (*p == '-' && p[1] >= '0' && p[1] <= '9')) {
      nums.push_back(std::strtod(p, &end));
      p = end;
    } else {
      ++p;
    }
  }
  if (nums.size() == 3) return Vec3{nums[0], nums[1], nums[2]};
  return std::nullopt;
}

}  // namespace

std::string build_prompt(const QARecord& record, const PromptSpec& spec) {
  const size_t n_images = std::max<size_t>(1, record.frame_refs.size());
  std::string img = "<im_start>";
  for (size_t i = 0; i < n_images; ++i) img += "<image>";
  img += "<im_end>";

  std::string prompt = spec.system_prefix;
  prompt += "###Human: " + img + "\n";
  prompt += "Human: Answer in natural language. " + record.question;
  if (!record.choices.empty()) {
    prompt += " Choose between the following options: " +
              join_options(record.choices, spec.mode == PromptSpec::OptionMode::LetterOptions) +
              ".";
  }
  prompt += "###Assistant:";
  return prompt;
}

Answer OracleAnswerer::answer(const QARecord& record, const std::vector<const Frame*>&) {
  const std::string gold = recompute_gold(record.task, record.derivation);
  Answer a;
  a.raw = gold;
  if (record.task == TaskType::Precise3D) {
    a.triple = parse_triple(gold);
    if (!a.triple) throw DerivationMismatch("oracle: unparseable recomputed triple " + gold);
    return a;
  }
  for (size_t i = 0; i < record.choices.size(); ++i) {
    if (record.choices[i] == gold) {
      a.choice_index = static_cast<int>(i);
      return a;
    }
  }
  throw DerivationMismatch("oracle: recomputed gold '" + gold + "' is not among the choices of " +
                           record.record_id);
}

Answer RandomAnswerer::answer(const QARecord& record, const std::vector<const Frame*>&) {
  Rng rng(derive_seed(seed_, {kEvalStream, fnv1a(record.record_id)}));
  Answer a;
  if (record.task == TaskType::Precise3D) {
    a.triple = Vec3{rng.uniform(-4.0, 4.0), rng.uniform(0.0, 2.5), rng.uniform(0.0, 8.0)};
    return a;
  }
  a.choice_index =
      static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(record.choices.size()) - 1));
  return a;
}

Answer FixedAnswerer::answer(const QARecord& record, const std::vector<const Frame*>&) {
  Answer a;
  if (record.task == TaskType::Precise3D) {
    a.triple = Vec3{0.0, 0.0, 0.0};
    return a;
  }
  a.choice_index = std::min(index_, static_cast<int>(record.choices.size()) - 1);
  return a;
}

int parse_choice_from_text(const std::string& response, const std::vector<std::string>& choices) {
  const std::string text = lower(response);
  int best = -1;
  size_t best_len = 0;
  for (size_t i = 0; i < choices.size(); ++i) {
    const std::string needle = lower(choices[i]);
    if (needle.empty()) continue;
    if (text.find(needle) != std::string::npos && needle.size() > best_len) {
      best = static_cast<int>(i);
      best_len = needle.size();
    }
  }
  if (best >= 0) return best;
  // Letter fallback: a standalone A/B/C/... naming an option.
  for (size_t i = 0; i < response.size(); ++i) {
    const char c = response[i];
    const int idx = std::toupper(static_cast<unsigned char>(c)) - 'A';
    if (idx < 0 || idx >= static_cast<int>(choices.size())) continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(response[i - 1]));
    const bool right_ok =
        i + 1 == response.size() || !std::isalnum(static_cast<unsigned char>(response[i + 1]));
    if (left_ok && right_ok) return idx;
  }
  return -1;
}

Answer RemoteAnswerer::answer(const QARecord& record, const std::vector<const Frame*>& frames) {
  json body;
  body["record_id"] = record.record_id;
  body["task"] = task_name(record.task);
  body["prompt"] = build_prompt(record, config_.prompt);
  body["question"] = record.question;
  body["choices"] = record.choices;
  json images = json::array();
  for (const Frame* f : frames) {
    if (!f) continue;
    images.push_back(json{{"frame_id", f->frame_id},
                          {"media_type", "image/svg+xml"},
                          {"data_base64", base64_encode(render_frame_svg(*f))}});
  }
  body["images"] = images;
  const std::string payload = body.dump();

  std::string last_error = "no attempt";
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    httplib::Client cli(config_.host, config_.port);
    const auto timeout = std::chrono::milliseconds(static_cast<int>(config_.timeout_s * 1000));
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.auth_header.empty()) {
      const auto colon = config_.auth_header.find(':');
      if (colon != std::string::npos) {
        std::string name = config_.auth_header.substr(0, colon);
        std::string value = config_.auth_header.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        headers.emplace(name, value);
      }
    }
    auto res = cli.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    Answer a;
    try {
      const json reply = json::parse(res->body);
      a.raw = reply.at("answer").get<std::string>();
    } catch (const json::exception&) {
      a.raw = res->body;
    }
    if (record.task == TaskType::Precise3D) {
      a.triple = scan_triple(a.raw);
      a.unparseable = !a.triple.has_value();
    } else {
      a.choice_index = parse_choice_from_text(a.raw, record.choices);
      a.unparseable = a.choice_index < 0;
    }
    return a;
  }
  throw TransportError("remote endpoint " + config_.host + ":" + std::to_string(config_.port) +
                       " failed after " + std::to_string(config_.retries + 1) +
                       " attempts: " + last_error);
}

EvalReport score(const std::vector<QARecord>& records, const std::vector<Frame>& frames,
                 Answerer& answerer) {
  std::map<std::string, const Frame*> frame_map;
  for (const Frame& f : frames) frame_map[f.frame_id] = &f;

  struct Slot {
    Answer answer;
    std::string status;  // empty until processed
  };
  std::vector<Slot> slots(records.size());
  std::atomic<size_t> next{0};
  std::atomic<int> consecutive_failures{0};
  std::atomic<bool> stop{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&]() {
    while (!stop.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      const QARecord& r = records[i];
      std::vector<const Frame*> record_frames;
      for (const auto& ref : r.frame_refs) {
        auto it = frame_map.find(ref);
        if (it != frame_map.end()) record_frames.push_back(it->second);
      }
      try {
        slots[i].answer = answerer.answer(r, record_frames);
        slots[i].status = slots[i].answer.unparseable ? "unparseable" : "ok";
        consecutive_failures.store(0);
      } catch (const TransportError&) {
        slots[i].status = "transport_error";
        if (consecutive_failures.fetch_add(1) + 1 >= 5) stop.store(true);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(answerer.max_parallel(), static_cast<int>(records.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  EvalReport report;
  report.answerer = answerer.name();
  for (size_t i = 0; i < records.size(); ++i) {
    const QARecord& r = records[i];
    RecordVerdict v;
    v.record_id = r.record_id;
    v.task = task_name(r.task);
    v.gold = r.gold_index;
    if (slots[i].status.empty()) {
      v.status = "skipped";
      ++report.skipped;
      report.verdicts.push_back(std::move(v));
      continue;
    }
    v.status = slots[i].status;
    if (v.status == "transport_error") {
      ++report.transport_errors;
      report.verdicts.push_back(std::move(v));
      continue;
    }
    if (v.status == "unparseable") ++report.unparseable;
    const Answer& a = slots[i].answer;
    TaskAccuracy& acc = report.per_task[task_name(r.task)];
    ++acc.total;
    if (r.task == TaskType::Precise3D) {
      const auto gold = parse_triple(r.gold);
      double tol = 0.005;
      if (r.derivation.contains("tolerance")) tol = r.derivation["tolerance"].get<double>();
      if (gold && a.triple && std::fabs(a.triple->x - gold->x) <= tol &&
          std::fabs(a.triple->y - gold->y) <= tol && std::fabs(a.triple->z - gold->z) <= tol) {
        v.correct = true;
      }
    } else {
      v.predicted = a.choice_index;
      v.correct = !a.unparseable && a.choice_index == r.gold_index;
      ++report.prediction_hist[task_name(r.task)][a.choice_index];
    }
    if (v.correct) ++acc.correct;
    report.verdicts.push_back(std::move(v));
  }

  double sum = 0.0;
  int n_tasks = 0;
  for (const auto& [task, acc] : report.per_task) {
    if (task == task_name(TaskType::Precise3D)) continue;
    sum += acc.accuracy();
    ++n_tasks;
  }
  report.overall = n_tasks ? sum / n_tasks : 0.0;
  return report;
}

std::string report_text(const EvalReport& report) {
  // Fixed column order following the benchmark table layout.
  const TaskType order[] = {TaskType::EgoMove,     TaskType::ObjMove, TaskType::ActionConsequence,
                            TaskType::GoalAim,     TaskType::Perspective,
                            TaskType::RelSpatial,  TaskType::RelDepth, TaskType::Count};
  std::ostringstream out;
  out << "== eval report: " << report.answerer << " ==\n";
  std::string header, row;
  for (TaskType t : order) {
    auto it = report.per_task.find(task_name(t));
    if (it == report.per_task.end()) continue;
    char cell[32];
    std::snprintf(cell, sizeof(cell), "%-8s", task_short_name(t));
    header += cell;
    std::snprintf(cell, sizeof(cell), "%-8.1f", 100.0 * it->second.accuracy());
    row += cell;
  }
  header += "| Avg";
  char avg[32];
  std::snprintf(avg, sizeof(avg), "| %.1f", 100.0 * report.overall);
  row += avg;
  out << header << "\n" << row << "\n";
  auto p3 = report.per_task.find(task_name(TaskType::Precise3D));
  if (p3 != report.per_task.end()) {
    char line[64];
    std::snprintf(line, sizeof(line), "Prec3D: %.1f (reported separately, excluded from Avg)\n",
                  100.0 * p3->second.accuracy());
    out << line;
  }
  int total = 0;
  int correct = 0;
  for (const auto& [task, acc] : report.per_task) {
    (void)task;
    total += acc.total;
    correct += acc.correct;
  }
  out << "records: " << total << ", correct: " << correct
      << ", transport errors: " << report.transport_errors
      << ", unparseable: " << report.unparseable << ", skipped: " << report.skipped << "\n";
  out << "prediction histogram (choice position -> count):\n";
  for (const auto& [task, hist] : report.prediction_hist) {
    out << "  " << task << ":";
    for (const auto& [idx, n] : hist) out << " " << idx << ":" << n;
    out << "\n";
  }
  return out.str();
}

nlohmann::ordered_json report_json(const EvalReport& report) {
  json j;
  j["answerer"] = report.answerer;
  json tasks;
  for (const auto& [task, acc] : report.per_task) {
    tasks[task] = json{{"total", acc.total}, {"correct", acc.correct},
                       {"accuracy", acc.accuracy()}};
  }
  j["per_task"] = tasks;
  j["overall"] = report.overall;
  j["transport_errors"] = report.transport_errors;
  j["unparseable"] = report.unparseable;
  j["skipped"] = report.skipped;
  json hist;
  for (const auto& [task, h] : report.prediction_hist) {
    json th;
    for (const auto& [idx, n] : h) th[std::to_string(idx)] = n;
    hist[task] = th;
  }
  j["prediction_histogram"] = hist;
  json verdicts = json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back(json{{"record_id", v.record_id},
                            {"task", v.task},
                            {"predicted", v.predicted},
                            {"gold", v.gold},
                            {"correct", v.correct},
                            {"status", v.status}});
  }
  j["verdicts"] = verdicts;
  return j;
}

int run_stub_server(const std::string& host, int port) {
  httplib::Server server;
  server.Post("/answer", [](const httplib::Request& req, httplib::Response& res) {
    std::string answer = "(0.00, 0.00, 0.00)";
    try {
      const json body = json::parse(req.body);
      const auto& choices = body.at("choices");
      if (choices.is_array() && !choices.empty()) {
        answer = choices[0].get<std::string>();
      }
    } catch (const json::exception&) {
      // fall through with the default answer
    }
    res.set_content(json{{"answer", answer}}.dump(), "application/json");
  });
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  if (!server.listen(host, port)) return 2;
  return 0;
}

}  // namespace spatialqa
