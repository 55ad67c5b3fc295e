#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "refactorkit/assertlang.hpp"
#include "refactorkit/common.hpp"

namespace refactorkit::taskspec {

inline constexpr std::string_view kManifestSchemaVersion = "refactorkit.manifest/1";

struct DigestMismatch : std::runtime_error {
  DigestMismatch(std::string what_ref, std::string expected, std::string actual);

  std::string ref;
  std::string expected;
  std::string actual;
};

struct MixedRepo : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownTask : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingPlaceholder : std::runtime_error {
  explicit MissingPlaceholder(std::string name);
  std::string placeholder;
};

struct EmptyCorpus : std::runtime_error {
  EmptyCorpus() : std::runtime_error("empty corpus") {}
};

struct InstructionSet {
  std::string lazy;
  std::string base;
  std::string descriptive;
  friend bool operator==(const InstructionSet&, const InstructionSet&) = default;
};

/// A directory tree or a tar archive, addressed by its content digest.
struct Snapshot {
  /// As written in the manifest (relative to the manifest directory).
  std::string ref;
  std::filesystem::path resolved;
  std::string digest;

  bool is_archive() const;
  std::vector<FileEntry> load_files() const;
  std::string compute_digest() const;
  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct RepoEntry {
  std::string repo_id;
  Snapshot snapshot;
  friend bool operator==(const RepoEntry&, const RepoEntry&) = default;
};

struct TaskInstance {
  std::string id;
  std::string repo_id;
  Snapshot snapshot;
  InstructionSet instructions;
  std::string suite_ref;
  std::filesystem::path suite_path;
  assertlang::AssertionSuite suite;
  /// Free-form tags, kept as written.
  Json metadata = Json::object();
  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

struct CorpusManifest {
  std::string corpus;
  std::string grammar_version;
  std::vector<RepoEntry> repos;
  std::vector<TaskInstance> tasks;
  std::filesystem::path base_dir;

  const TaskInstance& task(const std::string& id) const;  // throws UnknownTask
  const RepoEntry* repo(const std::string& repo_id) const;
  friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

struct PseudoTask {
  std::vector<std::string> task_ids;
  std::string repo_id;
  std::string combined_instruction;
  assertlang::AssertionSuite suite;
};

struct Aggregate {
  double mean = 0;
  double max = 0;
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct CorpusStats {
  std::size_t task_count = 0;
  std::size_t repo_count = 0;
  Aggregate lazy_words;
  Aggregate base_words;
  Aggregate descriptive_words;
  Aggregate repo_files;
  Aggregate repo_lines;
  Aggregate target_files;
  Aggregate suite_length;
};

/// Throws SchemaError or DigestMismatch. Relative refs resolve against base_dir.
CorpusManifest load_manifest(std::string_view document, const std::filesystem::path& base_dir);
CorpusManifest load_manifest_file(const std::filesystem::path& path);
Json serialize_manifest(const CorpusManifest& manifest);

/// Every aggregate is taken over tasks; repo figures count once per task.
CorpusStats corpus_stats(const CorpusManifest& manifest);
Json stats_json(const CorpusStats& stats);

PseudoTask compose_pseudotask(const CorpusManifest& manifest, const std::vector<std::string>& task_ids);
Json pseudotask_json(const PseudoTask& pseudo);

std::set<std::string> derive_target_files(const assertlang::AssertionSuite& suite);

/// Pairs of tasks that share at least one target file.
struct Overlap {
  std::string first;
  std::string second;
  std::vector<std::string> shared_files;
};
std::vector<Overlap> overlap_report(const CorpusManifest& manifest);

enum class InstructionKind { Lazy, Descriptive };

std::string render_instruction_prompt(InstructionKind kind, const std::string& base_instruction,
                                      const std::string& few_shots,
                                      const std::optional<std::string>& suite_text = std::nullopt);

}  // namespace refactorkit::taskspec
