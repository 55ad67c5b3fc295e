#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "refactorkit/common.hpp"
#include "refactorkit/evaluator.hpp"
#include "refactorkit/lmclient.hpp"
#include "refactorkit/taskspec.hpp"

namespace refactorkit::harness {

inline constexpr std::string_view kTrajectorySchemaVersion = "refactorkit.trajectory/1";

/// The model's reply broke the one-discussion-one-command format. what() is the
/// corrective text shown back as the observation.
struct FormatViolation : std::runtime_error {
  explicit FormatViolation(std::string reason);
  std::string reason;
};

struct InvalidRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// inject_external_edit after the episode has ended.
struct EpisodeClosed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CommandKind { Open, Goto, ScrollDown, ScrollUp, Search, Create, Edit, Submit, Shell };
std::string to_string(CommandKind kind);

struct ToolCommand {
  CommandKind kind = CommandKind::Shell;
  /// The command block exactly as written, without the trailing newline.
  std::string raw;
  /// open/create: file; search: file or directory scope; edit: file when given.
  std::string path;
  /// open/goto: target line (0 = unset).
  std::size_t line = 0;
  std::size_t line_start = 0;
  std::size_t line_end = 0;
  /// edit: replacement block; search: term; search_mode: search_dir | search_file | find_file.
  std::string text;
  std::string search_mode;
  friend bool operator==(const ToolCommand&, const ToolCommand&) = default;
};

/// Throws FormatViolation.
ToolCommand parse_command(std::string_view block);

struct Action {
  std::size_t index = 0;
  /// The full model reply.
  std::string response;
  std::string discussion;
  /// nullopt when the reply violated the format.
  std::optional<ToolCommand> command;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Splits a reply into discussion and its single fenced command block.
Action parse_action(std::string_view model_text, std::size_t index = 0);  // throws FormatViolation

struct EditSpan {
  std::string file;  // repo-relative
  std::size_t line_start = 0;
  std::size_t line_end = 0;
  friend bool operator==(const EditSpan&, const EditSpan&) = default;
};

struct Observation {
  std::size_t index = 0;
  std::string text;
  bool truncated = false;
  /// Set when the step's edit was applied.
  std::optional<EditSpan> edit;
  /// Shell prompt after the step.
  std::string open_file = "n/a";
  std::string working_dir;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// A concurrent user's change, applied to the workspace when injected.
struct ExternalEdit {
  std::string file;
  std::size_t line_start = 0;
  std::size_t line_end = 0;
  std::string replacement;
  friend bool operator==(const ExternalEdit&, const ExternalEdit&) = default;
};

struct EditRecord {
  std::string file;
  std::size_t line_start = 0;
  std::size_t line_end = 0;
  std::size_t first_seen = 0;
  friend bool operator==(const EditRecord&, const EditRecord&) = default;
};

struct StateSummary {
  std::string working_dir;
  std::string open_file = "n/a";
  std::vector<std::string> recent_edits;
  std::vector<std::string> external_edits;
  friend bool operator==(const StateSummary&, const StateSummary&) = default;
};

/// {"working_dir": ..., "open_file": ..., "recent_edits": [...]} with Python json.dumps spacing.
std::string state_document(const StateSummary& state);
StateSummary state_from_document(std::string_view text);  // throws SchemaError

struct Step {
  Action action;
  Observation observation;
  /// Drained into this step's state.
  std::vector<ExternalEdit> external_events;
  StateSummary state;
  friend bool operator==(const Step&, const Step&) = default;
};

enum class EpisodeStatus { Running, Submitted, StepLimit, CostLimit, Aborted };
std::string to_string(EpisodeStatus status);

struct Trajectory {
  std::string task_id;
  std::string instruction;
  std::string model;
  std::string policy;
  std::size_t window = 5;
  StateSummary initial_state;
  std::vector<Step> steps;
  EpisodeStatus status = EpisodeStatus::Running;
  std::optional<std::string> abort_reason;
  lmclient::Usage usage;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// ---------------------------------------------------------------- state policy

class StatePolicy {
 public:
  virtual ~StatePolicy() = default;
  virtual std::string name() const = 0;
  /// σ_N from τ_N (prefix ends with step N, whose state is not yet set), σ_{N-1}..σ_0, and
  /// events drained since σ_{N-1}. Deterministic.
  virtual StateSummary update(const std::vector<Step>& prefix, const std::vector<StateSummary>& prior,
                              const std::vector<ExternalEdit>& events) const = 0;
  virtual std::string render(const StateSummary& state) const = 0;
};

/// Edit ledger with first-occurrence dedup.
class LedgerPolicy : public StatePolicy {
 public:
  std::string name() const override { return "ledger"; }
  StateSummary update(const std::vector<Step>& prefix, const std::vector<StateSummary>& prior,
                      const std::vector<ExternalEdit>& events) const override;
  std::string render(const StateSummary& state) const override;
};

/// Baseline without the state lines.
class NullPolicy : public StatePolicy {
 public:
  std::string name() const override { return "none"; }
  StateSummary update(const std::vector<Step>& prefix, const std::vector<StateSummary>& prior,
                      const std::vector<ExternalEdit>& events) const override;
  std::string render(const StateSummary& state) const override;
};

std::unique_ptr<StatePolicy> make_policy(const std::string& name);  // throws SchemaError

std::vector<EditRecord> fold_ledger(const std::vector<Step>& prefix);
std::string render_edit(const EditRecord& record);
std::string render_external(const ExternalEdit& event);

StateSummary ledger_update(const std::vector<Step>& prefix, const StateSummary& previous,
                           const std::vector<ExternalEdit>& events);
std::string render_state_block(const StateSummary& state);

// ---------------------------------------------------------------- environment

struct EnvConfig {
  std::size_t window_lines = 100;
  std::size_t max_observation_chars = 10000;
  std::size_t search_limit = 50;
};

/// Deterministic stand-in for the agent's shell over an in-memory tree.
class Environment {
 public:
  Environment(std::string working_dir, evaluator::FileMap files, EnvConfig config = {});

  Observation step(const ToolCommand& command);
  /// Throws InvalidRange.
  void apply_external(const ExternalEdit& event);

  const evaluator::FileMap& files() const { return files_; }
  const std::string& working_dir() const { return working_dir_; }
  /// "/<working_dir>/<path>" or "n/a".
  std::string open_file_display() const;
  const std::optional<std::string>& open_file() const { return open_; }

 private:
  std::string show_window();
  std::string run(const ToolCommand& command, std::optional<EditSpan>& edit);
  std::string run_shell(const std::string& raw);
  std::string search(const ToolCommand& command);
  std::optional<std::string> resolve(const std::string& path) const;

  std::string working_dir_;
  evaluator::FileMap files_;
  EnvConfig config_;
  std::optional<std::string> open_;
  std::size_t first_line_ = 1;
};

// ---------------------------------------------------------------- episodes

struct ScheduledEdit {
  /// Injected once this many steps have completed.
  std::size_t after_step = 0;
  ExternalEdit edit;
};

struct EpisodeConfig {
  std::size_t window = 5;
  std::size_t max_steps = 60;
  /// Token budget reported by the client; 0 = unlimited.
  std::size_t budget = 0;
  std::string model;
  EnvConfig env;
  std::vector<ScheduledEdit> external_edits;
  /// lazy | base | descriptive
  std::string instruction_set = "base";
};

/// [{"after_step", "file", "line_start", "line_end", "replacement"}, ...]
std::vector<ScheduledEdit> scheduled_edits_from_json(const Json& document);  // throws SchemaError

std::string system_prompt(std::size_t window_lines);
std::string instance_prompt(const std::string& instruction);

/// Message list sent before step N+1: all actions verbatim, the last W observations verbatim,
/// earlier ones elided to one line.
std::vector<lmclient::Message> window_context(const Trajectory& trajectory, const StatePolicy& policy,
                                              std::size_t window_lines = 100);
/// Marker replacing an observation outside the window.
std::string elided_observation(const Observation& observation);

class Episode {
 public:
  Episode(std::string task_id, std::string instruction, std::string working_dir, evaluator::FileMap files,
          lmclient::Client& client, const StatePolicy& policy, EpisodeConfig config);

  bool done() const { return trajectory_.status != EpisodeStatus::Running; }
  /// One LM call, one environment step, one state update. False when nothing was recorded.
  bool step();
  void run();

  /// Throws InvalidRange, EpisodeClosed.
  void inject_external_edit(const ExternalEdit& event);

  const Trajectory& trajectory() const { return trajectory_; }
  const Environment& environment() const { return env_; }
  /// Unified diff of the workspace against its starting tree.
  std::string patch() const;

 private:
  const evaluator::FileMap initial_;
  Environment env_;
  lmclient::Client& client_;
  const StatePolicy& policy_;
  EpisodeConfig config_;
  Trajectory trajectory_;
  std::vector<ExternalEdit> pending_;
};

struct EpisodeResult {
  Trajectory trajectory;
  std::string patch;
};

EpisodeResult run_episode(const taskspec::TaskInstance& task, lmclient::Client& client, const StatePolicy& policy,
                          EpisodeConfig config);

// ---------------------------------------------------------------- logs

Json export_trajectory(const Trajectory& trajectory);
Trajectory import_trajectory(const Json& document);  // throws SchemaError
std::string trajectory_digest(const Trajectory& trajectory);

/// Replays the policy over every prefix; true when each stored σ_n matches.
bool states_recompute(const Trajectory& trajectory, const StatePolicy& policy);

}  // namespace refactorkit::harness
