#include "refactorkit/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <ostream>

#include "refactorkit/evaluator.hpp"
#include "refactorkit/harness.hpp"
#include "refactorkit/stategym.hpp"

namespace refactorkit::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_output(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, text);
}

// Owns the client and, when recording, the wrapper in front of it.
struct LmStack {
  std::unique_ptr<lmclient::Client> inner;
  std::unique_ptr<lmclient::RecordingClient> recorder;
  lmclient::Client& get() { return recorder ? *recorder : *inner; }
};

std::unique_ptr<lmclient::Client> shared_backend(const std::string& spec) {
  if (spec.starts_with("scripted:")) return std::make_unique<lmclient::ScriptedClient>(lmclient::load_script(spec.substr(9)));
  if (spec.starts_with("replay:")) return std::make_unique<lmclient::ReplayClient>(lmclient::load_cassette(spec.substr(7)));
  if (spec == "remote") {
    auto cfg = lmclient::RemoteConfig::from_env();
    if (!cfg) throw UsageError("--lm remote needs REFACTORKIT_LM_BASE_URL");
    return std::make_unique<lmclient::RemoteClient>(*cfg);
  }
  return nullptr;
}

LmStack make_lm(const std::string& spec, const std::string& record, std::uint64_t seed, bool simulated) {
  LmStack s;
  s.inner = shared_backend(spec);
  if (!s.inner && simulated) {
    if (spec == "oracle") s.inner = stategym::oracle_lm();
    else if (spec == "echo") s.inner = stategym::echo_lm();
    else if (spec.starts_with("lossy:")) {
      double p = 0;
      try {
        p = std::stod(spec.substr(6));
      } catch (const std::exception&) {
        throw UsageError("bad drop probability in --lm " + spec);
      }
      if (p < 0 || p > 1) throw UsageError("drop probability must be in [0, 1]");
      s.inner = stategym::lossy_lm(p, seed);
    }
  }
  if (!s.inner) {
    if (spec.empty()) throw UsageError("no language model configured (--lm)");
    throw UsageError("unknown --lm backend '" + spec + "'");
  }
  if (!record.empty()) s.recorder = std::make_unique<lmclient::RecordingClient>(*s.inner, record);
  return s;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoul(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad --grid value '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("empty --grid");
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_validate(const fs::path& manifest_path, std::ostream& out) {
  auto m = taskspec::load_manifest_file(manifest_path);
  out << "corpus " << m.corpus << ": " << m.tasks.size() << " tasks, " << m.repos.size() << " repos\n";
  for (const auto& t : m.tasks)
    out << "  " << t.id << " (" << t.repo_id << "): " << t.suite.assertions.size() << " assertions, "
        << taskspec::derive_target_files(t.suite).size() << " target files\n";
  for (const auto& o : taskspec::overlap_report(m)) {
    out << "  note: " << o.first << " and " << o.second << " share";
    for (const auto& f : o.shared_files) out << " " << f;
    out << "\n";
  }
  return kOk;
}

int cmd_eval(const fs::path& manifest_path, const fs::path& patches, const std::vector<std::string>& only,
             const fs::path& out_path, const std::string& format, unsigned jobs, std::ostream& out, std::ostream& err) {
  auto m = taskspec::load_manifest_file(manifest_path);
  if (!fs::is_directory(patches)) throw UsageError("patch directory " + patches.string() + " not found");
  std::vector<evaluator::BatchItem> items;
  for (const auto& t : m.tasks) {
    if (!only.empty() && std::find(only.begin(), only.end(), t.id) == only.end()) continue;
    const fs::path p = patches / (t.id + ".patch");
    items.push_back({&t, fs::exists(p) ? read_file(p) : std::string()});
    if (!fs::exists(p)) err << "note: no patch for " << t.id << ", scoring the empty patch\n";
  }
  for (const auto& id : only) m.task(id);
  if (items.empty()) throw UsageError("no tasks selected");
  auto reports = evaluator::evaluate_batch(items, jobs);
  out << evaluator::render_batch(reports, evaluator::ReportFormat::Text);
  const auto score = evaluator::score_run(reports);
  out << "resolution_rate: " << fmt(score.resolution_rate) << " (" << static_cast<std::size_t>(
             score.resolution_rate * static_cast<double>(score.tasks) + 0.5)
      << "/" << score.tasks << ")\n";
  out << "mean_subtask_rate: " << fmt(score.mean_subtask_rate) << "\n";
  out << "mean_target_coverage: " << fmt(score.mean_target_coverage) << "\n";
  if (!out_path.empty())
    write_output(out_path, evaluator::render_batch(reports, format == "text" ? evaluator::ReportFormat::Text
                                                                              : evaluator::ReportFormat::Machine));
  return score.resolution_rate == 1.0 ? kOk : kUnresolved;
}

int cmd_stats(const fs::path& manifest_path, const fs::path& out_path, std::ostream& out) {
  auto m = taskspec::load_manifest_file(manifest_path);
  const Json j = taskspec::stats_json(taskspec::corpus_stats(m));
  out << "tasks: " << j["tasks"] << "\nrepos: " << j["repos"] << "\n";
  for (const auto& [k, v] : j.items()) {
    if (!v.is_object()) continue;
    out << k << ": mean " << fmt(v["mean"].get<double>()) << ", max " << fmt(v["max"].get<double>()) << "\n";
  }
  if (!out_path.empty()) write_output(out_path, j.dump(2) + "\n");
  return kOk;
}

int cmd_pseudotask(const fs::path& manifest_path, const std::vector<std::string>& ids, const fs::path& out_path,
                   std::ostream& out) {
  auto m = taskspec::load_manifest_file(manifest_path);
  auto p = taskspec::compose_pseudotask(m, ids);
  out << "pseudotask over " << p.task_ids.size() << " tasks on " << p.repo_id << ": " << p.suite.assertions.size()
      << " assertions, " << word_count(p.combined_instruction) << " instruction words\n";
  write_output(out_path, taskspec::pseudotask_json(p).dump(2) + "\n");
  return kOk;
}

struct AgentOptions {
  fs::path manifest;
  std::string task;
  std::string lm;
  std::string record;
  std::string policy = "ledger";
  std::size_t window = 5;
  std::size_t max_steps = 60;
  std::size_t budget = 0;
  std::string instruction_set = "base";
  std::string model;
  fs::path external_edits;
  fs::path config;
  fs::path out_dir;
};

// Config file values apply unless the flag was given.
void apply_config(AgentOptions& o, const CLI::App& app) {
  if (o.config.empty()) return;
  const Json c = Json::parse(read_file(o.config));
  if (!c.is_object()) throw SchemaError(o.config.string(), "expected an object");
  reject_unknown_keys(c, {"policy", "window", "max_steps", "budget", "instruction_set", "model"}, o.config.string());
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (c.contains(key) && app.count(flag) == 0) field = c[key].get<std::decay_t<decltype(field)>>();
  };
  try {
    take("policy", "--policy", o.policy);
    take("window", "--window", o.window);
    take("max_steps", "--max-steps", o.max_steps);
    take("budget", "--budget", o.budget);
    take("instruction_set", "--instruction-set", o.instruction_set);
    take("model", "--model", o.model);
  } catch (const Json::exception& e) {
    throw SchemaError(o.config.string(), e.what());
  }
}

int cmd_agent(AgentOptions o, const CLI::App& app, std::ostream& out) {
  apply_config(o, app);
  if (o.instruction_set != "lazy" && o.instruction_set != "base" && o.instruction_set != "descriptive")
    throw UsageError("--instruction-set must be lazy, base or descriptive");
  if (o.window == 0) throw UsageError("--window must be at least 1");
  auto m = taskspec::load_manifest_file(o.manifest);
  const auto& task = m.task(o.task);
  auto policy = harness::make_policy(o.policy);
  harness::EpisodeConfig cfg;
  cfg.window = o.window;
  cfg.max_steps = o.max_steps;
  cfg.budget = o.budget;
  cfg.instruction_set = o.instruction_set;
  cfg.model = o.model.empty() ? o.lm.substr(0, o.lm.find(':')) : o.model;
  if (!o.external_edits.empty())
    cfg.external_edits = harness::scheduled_edits_from_json(Json::parse(read_file(o.external_edits)));
  auto lm = make_lm(o.lm, o.record, 0, false);

  auto result = harness::run_episode(task, lm.get(), *policy, cfg);
  const auto& t = result.trajectory;
  write_output(o.out_dir / (task.id + ".trajectory.json"), harness::export_trajectory(t).dump(2) + "\n");
  write_output(o.out_dir / (task.id + ".patch"), result.patch);
  out << task.id << ": " << harness::to_string(t.status) << " after " << t.steps.size() << " steps";
  if (t.abort_reason) out << " (" << *t.abort_reason << ")";
  out << "\nusage: " << t.usage.prompt << " prompt, " << t.usage.completion << " completion\n";
  out << "trajectory: " << harness::trajectory_digest(t) << "\n";
  return t.status == harness::EpisodeStatus::Submitted ? kOk : kUnresolved;
}

struct GymOptions {
  std::uint64_t seed = 0;
  std::size_t initial = 50;
  std::size_t per_state = 5;
  std::size_t actions = 50;
  std::string grid = "0,10,20,30,40,50";
  std::string lm;
  std::string record;
  std::string model;
  fs::path runs_in;
  fs::path runs_out;
  fs::path out;
};

int cmd_stategym(const GymOptions& o, std::ostream& out) {
  const auto grid = parse_grid(o.grid);
  std::vector<stategym::SyntheticRun> runs;
  if (!o.runs_in.empty()) {
    runs = stategym::runs_from_json(Json::parse(read_file(o.runs_in)));
  } else {
    if (o.initial == 0 || o.per_state == 0 || o.actions == 0) throw UsageError("counts must be at least 1");
    runs = stategym::generate_runs(o.seed, o.initial, o.per_state, o.actions);
  }
  for (std::size_t n : grid)
    for (const auto& r : runs)
      if (n > r.actions.size()) throw UsageError("grid value " + std::to_string(n) + " exceeds the run length");
  auto lm = make_lm(o.lm, o.record, o.seed, true);
  if (!o.runs_out.empty()) write_output(o.runs_out, stategym::runs_json(runs, o.seed).dump(1) + "\n");

  const auto table = stategym::score(runs, lm.get(), grid, o.model);
  std::size_t failures = 0;
  out << runs.size() << " runs, backend " << lm.get().backend() << "\n";
  for (const auto& pt : table) {
    out << "n=" << pt.n << " exact_match=" << fmt(pt.exact_match) << " per_entry=" << fmt(pt.per_entry);
    if (pt.unparseable) out << " unparseable=" << pt.unparseable;
    if (pt.failures) out << " failures=" << pt.failures;
    out << "\n";
    failures += pt.failures;
  }
  std::optional<stategym::Trend> tr;
  if (table.size() >= 3) {
    tr = stategym::trend(table);
    out << "trend: slope=" << fmt(tr->slope) << " rank_correlation=" << fmt(tr->rank_correlation) << "\n";
  }
  if (!o.out.empty()) write_output(o.out, stategym::table_json(table, tr ? &*tr : nullptr).dump(2) + "\n");
  return failures ? kUnresolved : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Refactoring benchmark toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  fs::path manifest, out_path, patches;
  std::string format = "machine";
  unsigned jobs = 1;
  std::vector<std::string> ids;

  auto* validate = app.add_subcommand("validate", "Load and check a manifest and its suites");
  validate->add_option("manifest", manifest)->required();
  validate->callback([&] { action = [&] { return cmd_validate(manifest, out); }; });

  auto* eval = app.add_subcommand("eval", "Score one patch per task (missing patch = empty patch)");
  eval->add_option("manifest", manifest)->required();
  eval->add_option("patches", patches, "Directory of <task-id>.patch files")->required();
  eval->add_option("--tasks", ids, "Only these task ids");
  eval->add_option("--out", out_path, "Write the batch report here");
  eval->add_option("--format", format)->check(CLI::IsMember({"text", "machine"}));
  eval->add_option("--jobs", jobs)->check(CLI::Range(1u, 256u));
  eval->callback([&] { action = [&] { return cmd_eval(manifest, patches, ids, out_path, format, jobs, out, err); }; });

  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("manifest", manifest)->required();
  stats->add_option("--out", out_path, "Write the machine document here");
  stats->callback([&] { action = [&] { return cmd_stats(manifest, out_path, out); }; });

  auto* pseudo = app.add_subcommand("pseudotask", "Compose same-repo tasks into one");
  pseudo->add_option("manifest", manifest)->required();
  pseudo->add_option("ids", ids)->required()->expected(2, -1);
  pseudo->add_option("--out", out_path)->required();
  pseudo->callback([&] { action = [&] { return cmd_pseudotask(manifest, ids, out_path, out); }; });

  AgentOptions ao;
  auto* agent = app.add_subcommand("agent", "Run one agent episode");
  agent->add_option("manifest", ao.manifest)->required();
  agent->add_option("task", ao.task)->required();
  agent->add_option("--lm", ao.lm, "scripted:FILE | replay:FILE | remote");
  agent->add_option("--record", ao.record, "Record a cassette");
  agent->add_option("--policy", ao.policy)->check(CLI::IsMember({"ledger", "none"}));
  agent->add_option("--window", ao.window);
  agent->add_option("--max-steps", ao.max_steps)->check(CLI::PositiveNumber);
  agent->add_option("--budget", ao.budget, "Token budget, 0 = none");
  agent->add_option("--instruction-set", ao.instruction_set);
  agent->add_option("--model", ao.model);
  agent->add_option("--external-edits", ao.external_edits);
  agent->add_option("--config", ao.config, "JSON file of episode defaults");
  agent->add_option("--out", ao.out_dir)->required();
  agent->callback([&] { action = [&] { return cmd_agent(ao, *agent, out); }; });

  GymOptions go;
  auto* gym = app.add_subcommand("stategym", "State reconstruction experiment");
  gym->add_option("--seed", go.seed);
  gym->add_option("--initial", go.initial, "Initial states");
  gym->add_option("--per-state", go.per_state, "Runs per initial state");
  gym->add_option("--actions", go.actions, "Actions per run");
  gym->add_option("--grid", go.grid, "Comma-separated prefix lengths");
  gym->add_option("--lm", go.lm, "oracle | echo | lossy:P | scripted:FILE | replay:FILE | remote");
  gym->add_option("--record", go.record);
  gym->add_option("--model", go.model);
  gym->add_option("--runs", go.runs_in, "Score runs from this file instead of generating");
  gym->add_option("--runs-out", go.runs_out);
  gym->add_option("--out", go.out, "Write the accuracy table here");
  gym->callback([&] { action = [&] { return cmd_stategym(go, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const taskspec::DigestMismatch& e) {
    err << "error: " << e.what() << "\n";
  } catch (const taskspec::UnknownTask& e) {
    err << "error: " << e.what() << "\n";
  } catch (const taskspec::MixedRepo& e) {
    err << "error: " << e.what() << "\n";
  } catch (const taskspec::EmptyCorpus& e) {
    err << "error: " << e.what() << "\n";
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << "\n";
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  } catch (const lmclient::LmFailure& e) {
    err << "error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kUsage;
}

}  // namespace refactorkit::cli
