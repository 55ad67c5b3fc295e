#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "refactorkit/assertlang.hpp"
#include "refactorkit/common.hpp"
#include "refactorkit/taskspec.hpp"

namespace refactorkit::evaluator {

inline constexpr std::string_view kReportSchemaVersion = "refactorkit.report/1";
inline constexpr std::string_view kBatchSchemaVersion = "refactorkit.batch/1";

struct MalformedDiff : std::runtime_error {
  MalformedDiff(std::size_t line, std::string reason);
  std::size_t line;  // 1-based line in the patch text, 0 when not line-specific
  std::string reason;
};

struct ContextMismatch : std::runtime_error {
  ContextMismatch(std::string file, std::size_t hunk);
  std::string file;
  std::size_t hunk;  // 1-based within the file
};

struct EmptyRun : std::runtime_error {
  EmptyRun() : std::runtime_error("empty run") {}
};

// ---------------------------------------------------------------- patches

struct Hunk {
  std::size_t old_start = 0;
  std::size_t old_count = 0;
  std::size_t new_start = 0;
  std::size_t new_count = 0;
  /// Text after the closing "@@", kept for re-serialization.
  std::string section;
  /// Body lines with their one-character prefix (' ', '-', '+', '\\').
  std::vector<std::string> lines;
  friend bool operator==(const Hunk&, const Hunk&) = default;
};

struct FilePatch {
  /// Lines preceding "---" (e.g. "diff -ruN a/x b/x", "index ...").
  std::vector<std::string> preamble;
  std::string old_header;  // full "--- ..." line
  std::string new_header;  // full "+++ ..." line
  /// Repo-relative paths; nullopt for /dev/null.
  std::optional<std::string> old_path;
  std::optional<std::string> new_path;
  std::vector<Hunk> hunks;

  const std::string& path() const { return new_path ? *new_path : *old_path; }
  friend bool operator==(const FilePatch&, const FilePatch&) = default;
};

struct Patch {
  std::vector<FilePatch> files;
  /// Unrecognized lines after the last hunk.
  std::vector<std::string> trailer;
  bool empty() const { return files.empty(); }
  friend bool operator==(const Patch&, const Patch&) = default;
};

/// Throws MalformedDiff. Blank text is the empty patch.
Patch parse_patch(std::string_view text);
/// Reproduces the parsed text (every line newline-terminated).
std::string serialize_patch(const Patch& patch);

using FileMap = std::map<std::string, std::string>;

/// Pure application over an in-memory tree; all-or-nothing. Returns touched paths.
std::set<std::string> apply_patch(FileMap& files, const Patch& patch);

/// Unified diff (3 lines of context) taking `before` to `after`.
std::string make_patch(const FileMap& before, const FileMap& after);

FileMap to_file_map(const std::vector<FileEntry>& files);
std::vector<FileEntry> to_entries(const FileMap& files);

// ---------------------------------------------------------------- workspaces

class Workspace {
 public:
  Workspace(std::string task_id, std::string snapshot_digest);
  ~Workspace();
  Workspace(Workspace&& other) noexcept;
  Workspace& operator=(Workspace&& other) noexcept;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const std::filesystem::path& root() const { return root_; }
  const std::string& task_id() const { return task_id_; }
  const std::string& snapshot_digest() const { return snapshot_digest_; }
  bool dirty() const { return dirty_; }
  void mark_dirty() { dirty_ = true; }

  FileMap files() const;
  std::string digest() const;
  /// Atomic at the patch level; writes only after every hunk has matched.
  std::set<std::string> apply(const Patch& patch);

 private:
  std::filesystem::path root_;
  std::string task_id_;
  std::string snapshot_digest_;
  bool dirty_ = false;
};

/// Throws DigestMismatch or IoFailure.
Workspace materialize_workspace(const taskspec::TaskInstance& task);
Workspace materialize_files(const std::string& task_id, const std::vector<FileEntry>& files);

// ---------------------------------------------------------------- reports

struct EvaluationReport {
  std::string task_id;
  std::string suite_ref;
  bool resolved = false;
  std::vector<assertlang::AssertionOutcome> outcomes;
  double subtask_rate = 0;
  std::set<std::string> files_edited;
  std::set<std::string> target_files;
  /// Ids of absence checks; their failures read "True is not false".
  std::set<std::string> absence_ids;
  double target_coverage = 0;
  std::optional<std::string> patch_error;
  double suite_seconds = 0;
  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

double target_coverage(const std::set<std::string>& files_edited, const std::set<std::string>& targets);

EvaluationReport evaluate_task(const taskspec::TaskInstance& task, std::string_view patch_text);
/// Same as above for a suite run against an arbitrary file set (pseudotasks, tests).
EvaluationReport evaluate_files(const std::string& task_id, const std::string& suite_ref,
                                const assertlang::AssertionSuite& suite, const std::vector<FileEntry>& files,
                                std::string_view patch_text);

struct BatchItem {
  const taskspec::TaskInstance* task;
  std::string patch_text;
};
/// Reports come back in input order regardless of `jobs`.
std::vector<EvaluationReport> evaluate_batch(const std::vector<BatchItem>& items, unsigned jobs);

struct RunScore {
  std::size_t tasks = 0;
  double resolution_rate = 0;
  double mean_subtask_rate = 0;
  double mean_target_coverage = 0;
};
RunScore score_run(const std::vector<EvaluationReport>& reports);  // throws EmptyRun

enum class ReportFormat { Text, Machine };

std::string render_report(const EvaluationReport& report, ReportFormat format);
std::string render_batch(const std::vector<EvaluationReport>& reports, ReportFormat format);

Json report_json(const EvaluationReport& report);
EvaluationReport report_from_json(const Json& document);  // throws SchemaError
Json batch_json(const std::vector<EvaluationReport>& reports);

/// Replaces the "in X.XXXs" duration tokens with "in <DURATION>s".
std::string mask_durations(std::string_view text);

}  // namespace refactorkit::evaluator
