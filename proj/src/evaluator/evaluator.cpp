#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <regex>
#include <thread>

#include "refactorkit/evaluator.hpp"

namespace refactorkit::evaluator {

namespace fs = std::filesystem;
using assertlang::AssertionOutcome;
using assertlang::Status;

Workspace::Workspace(std::string task_id, std::string snapshot_digest)
    : task_id_(std::move(task_id)), snapshot_digest_(std::move(snapshot_digest)) {
  std::string tmpl = (fs::temp_directory_path() / "refactorkit-ws-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw IoFailure("cannot create workspace directory under " + tmpl);
  root_ = tmpl;
}

Workspace::~Workspace() {
  if (root_.empty()) return;
  std::error_code ec;
  fs::remove_all(root_, ec);
}

Workspace::Workspace(Workspace&& other) noexcept
    : root_(std::exchange(other.root_, {})),
      task_id_(std::move(other.task_id_)),
      snapshot_digest_(std::move(other.snapshot_digest_)),
      dirty_(other.dirty_) {}

Workspace& Workspace::operator=(Workspace&& other) noexcept {
  if (this != &other) {
    if (!root_.empty()) {
      std::error_code ec;
      fs::remove_all(root_, ec);
    }
    root_ = std::exchange(other.root_, {});
    task_id_ = std::move(other.task_id_);
    snapshot_digest_ = std::move(other.snapshot_digest_);
    dirty_ = other.dirty_;
  }
  return *this;
}

FileMap Workspace::files() const {
  FileMap m;
  for (const auto& rel : list_files(root_)) m[rel] = read_file(root_ / rel);
  return m;
}

std::string Workspace::digest() const { return tree_digest(root_); }

std::set<std::string> Workspace::apply(const Patch& patch) {
  FileMap before = files();
  FileMap after = before;
  auto touched = apply_patch(after, patch);
  for (const auto& path : touched) {
    auto it = after.find(path);
    if (it == after.end()) fs::remove(root_ / path);
    else write_file(root_ / path, it->second);
  }
  if (!patch.empty()) dirty_ = true;
  return touched;
}

Workspace materialize_files(const std::string& task_id, const std::vector<FileEntry>& files) {
  Workspace ws(task_id, files_digest(files));
  for (const auto& f : files) write_file(ws.root() / f.path, f.content);
  return ws;
}

Workspace materialize_workspace(const taskspec::TaskInstance& task) {
  auto files = task.snapshot.load_files();
  std::string actual = files_digest(files);
  if (actual != task.snapshot.digest) throw taskspec::DigestMismatch(task.snapshot.ref, task.snapshot.digest, actual);
  return materialize_files(task.id, files);
}

double target_coverage(const std::set<std::string>& edited, const std::set<std::string>& targets) {
  if (targets.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& t : targets) hit += edited.count(t);
  return static_cast<double>(hit) / static_cast<double>(targets.size());
}

namespace {

void finish(EvaluationReport& r) {
  std::size_t passed = 0;
  for (const auto& o : r.outcomes) passed += o.status == Status::Pass;
  r.resolved = !r.outcomes.empty() && passed == r.outcomes.size();
  r.subtask_rate = r.outcomes.empty() ? 0 : static_cast<double>(passed) / static_cast<double>(r.outcomes.size());
  r.target_coverage = target_coverage(r.files_edited, r.target_files);
}

EvaluationReport run_in(Workspace& ws, const std::string& task_id, const std::string& suite_ref,
                        const assertlang::AssertionSuite& suite, std::string_view patch_text) {
  EvaluationReport r;
  r.task_id = task_id;
  r.suite_ref = suite_ref;
  r.target_files = taskspec::derive_target_files(suite);
  for (const auto& a : suite.assertions)
    if (assertlang::is_absence_kind(a.kind)) r.absence_ids.insert(a.id);
  try {
    r.files_edited = ws.apply(parse_patch(patch_text));
  } catch (const MalformedDiff& e) {
    r.patch_error = e.what();
  } catch (const ContextMismatch& e) {
    r.patch_error = e.what();
  }
  auto t0 = std::chrono::steady_clock::now();
  if (r.patch_error) {
    for (const auto& a : suite.assertions) r.outcomes.push_back({a.id, Status::Error, "patch rejected"});
  } else {
    r.outcomes = assertlang::run_suite(suite, ws.root());
  }
  r.suite_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finish(r);
  return r;
}

}  // namespace

EvaluationReport evaluate_files(const std::string& task_id, const std::string& suite_ref,
                                const assertlang::AssertionSuite& suite, const std::vector<FileEntry>& files,
                                std::string_view patch_text) {
  Workspace ws = materialize_files(task_id, files);
  return run_in(ws, task_id, suite_ref, suite, patch_text);
}

EvaluationReport evaluate_task(const taskspec::TaskInstance& task, std::string_view patch_text) {
  Workspace ws = materialize_workspace(task);
  return run_in(ws, task.id, task.suite_ref, task.suite, patch_text);
}

std::vector<EvaluationReport> evaluate_batch(const std::vector<BatchItem>& items, unsigned jobs) {
  std::vector<EvaluationReport> out(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < items.size();) {
      try {
        out[i] = evaluate_task(*items[i].task, items[i].patch_text);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(items.size(), 1))));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

RunScore score_run(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) throw EmptyRun();
  RunScore s;
  s.tasks = reports.size();
  double resolved = 0, subtask = 0, coverage = 0;
  for (const auto& r : reports) {
    resolved += r.resolved;
    subtask += r.subtask_rate;
    coverage += r.target_coverage;
  }
  const double n = static_cast<double>(reports.size());
  s.resolution_rate = resolved / n;
  s.mean_subtask_rate = subtask / n;
  s.mean_target_coverage = coverage / n;
  return s;
}

// ---------------------------------------------------------------- rendering

namespace {

const std::string kWide(80, '=');
const std::string kRule(70, '=');
const std::string kDash(70, '-');

std::string test_label(const EvaluationReport& r, const std::string& id) { return id + " (" + r.task_id + "." + id + ")"; }

std::string verdict(Status s) {
  switch (s) {
    case Status::Pass: return "ok";
    case Status::Fail: return "FAIL";
    case Status::Error: return "ERROR";
  }
  return "ERROR";
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

std::string section(const EvaluationReport& r) {
  std::string out = "Test file: " + r.suite_ref + "\n";
  if (r.resolved) return out + "Test results: Passed\n";
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
    const auto& o = r.outcomes[i];
    out += (i == 0 ? "Error: " : "") + test_label(r, o.id) + " ... " + verdict(o.status) + "\n";
  }
  out += "\n";
  std::size_t failures = 0, errors = 0;
  for (const auto& o : r.outcomes) {
    if (o.status == Status::Pass) continue;
    const bool fail = o.status == Status::Fail;
    (fail ? failures : errors) += 1;
    out += kRule + "\n" + (fail ? "FAIL: " : "ERROR: ") + test_label(r, o.id) + "\n" + kDash + "\n";
    if (fail) {
      out += std::string("AssertionError: ") + (r.absence_ids.count(o.id) ? "True is not false" : "False is not true") + " : " +
             o.message + "\n";
    } else {
      out += o.message + "\n";
    }
  }
  out += "\n" + kDash + "\n";
  out += "Ran " + std::to_string(r.outcomes.size()) + " test" + (r.outcomes.size() == 1 ? "" : "s") + " in " +
         format_seconds(r.suite_seconds) + "s\n";
  std::string counts;
  if (failures) counts = "failures=" + std::to_string(failures);
  if (errors) counts += (counts.empty() ? "" : ", ") + std::string("errors=") + std::to_string(errors);
  out += "FAILED (" + counts + ")\n\n";
  return out;
}

}  // namespace

Json report_json(const EvaluationReport& r) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["task_id"] = r.task_id;
  j["suite_ref"] = r.suite_ref;
  j["resolved"] = r.resolved;
  j["subtask_rate"] = r.subtask_rate;
  j["target_coverage"] = r.target_coverage;
  j["files_edited"] = r.files_edited;
  j["target_files"] = r.target_files;
  j["absence_ids"] = r.absence_ids;
  j["patch_error"] = r.patch_error ? Json(*r.patch_error) : Json(nullptr);
  Json outs = Json::array();
  for (const auto& o : r.outcomes) {
    Json oj;
    oj["id"] = o.id;
    oj["status"] = assertlang::to_string(o.status);
    oj["message"] = o.message;
    outs.push_back(oj);
  }
  j["outcomes"] = outs;
  j["timings"] = {{"suite_seconds", r.suite_seconds}};
  return j;
}

EvaluationReport report_from_json(const Json& j) {
  const std::string loc = "report";
  if (!j.is_object()) throw SchemaError(loc, "expected an object");
  reject_unknown_keys(j,
                      {"schema_version", "task_id", "suite_ref", "resolved", "subtask_rate", "target_coverage",
                       "files_edited", "target_files", "absence_ids", "patch_error", "outcomes", "timings"},
                      loc);
  try {
    if (j.at("schema_version").get<std::string>() != kReportSchemaVersion)
      throw SchemaError(loc + ".schema_version", "unsupported version");
    EvaluationReport r;
    r.task_id = j.at("task_id").get<std::string>();
    r.suite_ref = j.at("suite_ref").get<std::string>();
    r.resolved = j.at("resolved").get<bool>();
    r.subtask_rate = j.at("subtask_rate").get<double>();
    r.target_coverage = j.at("target_coverage").get<double>();
    r.files_edited = j.at("files_edited").get<std::set<std::string>>();
    r.target_files = j.at("target_files").get<std::set<std::string>>();
    r.absence_ids = j.at("absence_ids").get<std::set<std::string>>();
    if (!j.at("patch_error").is_null()) r.patch_error = j.at("patch_error").get<std::string>();
    for (const auto& oj : j.at("outcomes")) {
      auto st = assertlang::status_from_string(oj.at("status").get<std::string>());
      if (!st) throw SchemaError(loc + ".outcomes", "unknown status");
      r.outcomes.push_back({oj.at("id").get<std::string>(), *st, oj.at("message").get<std::string>()});
    }
    r.suite_seconds = j.at("timings").at("suite_seconds").get<double>();
    return r;
  } catch (const Json::exception& e) {
    throw SchemaError(loc, e.what());
  }
}

Json batch_json(const std::vector<EvaluationReport>& reports) {
  Json j;
  j["schema_version"] = kBatchSchemaVersion;
  Json rs = Json::array();
  for (const auto& r : reports) rs.push_back(report_json(r));
  j["reports"] = rs;
  if (!reports.empty()) {
    RunScore s = score_run(reports);
    j["score"] = {{"tasks", s.tasks},
                  {"resolution_rate", s.resolution_rate},
                  {"mean_subtask_rate", s.mean_subtask_rate},
                  {"mean_target_coverage", s.mean_target_coverage}};
  }
  return j;
}

std::string render_batch(const std::vector<EvaluationReport>& reports, ReportFormat format) {
  if (format == ReportFormat::Machine) return batch_json(reports).dump(2) + "\n";
  std::string out = "Patch Evaluation Results\n" + kWide + "\n";
  for (const auto& r : reports) out += section(r) + kWide + "\n";
  return out;
}

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  if (format == ReportFormat::Machine) return report_json(report).dump(2) + "\n";
  return render_batch({report}, format);
}

std::string mask_durations(std::string_view text) {
  static const std::regex re(R"(( tests? in )\d+\.\d{3}s)");
  return std::regex_replace(std::string(text), re, "$1<DURATION>s");
}

}  // namespace refactorkit::evaluator
