#include "refactorkit/harness.hpp"

namespace refactorkit::harness {

namespace {

constexpr std::string_view kCommandDocs =
    "open <path> [<line_number>] - opens the file at the given path in the editor. If line_number is provided, the "
    "window will be moved to include that line\n"
    "goto <line_number> - moves the window to show <line_number>\n"
    "scroll_down - moves the window down {WINDOW} lines\n"
    "scroll_up - moves the window up {WINDOW} lines\n"
    "create <filename> - creates and opens a new file with the given name\n"
    "search_dir <search_term> [<dir>] - searches for search_term in all files in dir. If dir is not provided, "
    "searches in the current directory\n"
    "search_file <search_term> [<file>] - searches for search_term in file. If file is not provided, searches in "
    "the current open file\n"
    "find_file <file_name> [<dir>] - finds all files with the given name in dir. If dir is not provided, searches "
    "in the current directory\n"
    "edit <start_line>:<end_line>\n<replacement_text>\nend_of_edit - replaces lines <start_line> through "
    "<end_line> (inclusive) with the given text in the open file. The replacement text is terminated by a line "
    "with only end_of_edit on it\n"
    "submit - submits your current code and terminates the session\n";

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

std::size_t line_count(const std::string& text) { return split_lines(text).size(); }

std::string user_message(const std::string& observation, const StatePolicy& policy, const StateSummary& state) {
  const std::string block = policy.render(state);
  return observation.empty() ? block : observation + (observation.ends_with('\n') ? "" : "\n") + block;
}

Json edit_json(const ExternalEdit& e) {
  return {{"file", e.file}, {"line_start", e.line_start}, {"line_end", e.line_end}, {"replacement", e.replacement}};
}

EpisodeStatus status_from(const std::string& s) {
  for (auto st : {EpisodeStatus::Running, EpisodeStatus::Submitted, EpisodeStatus::StepLimit, EpisodeStatus::CostLimit,
                  EpisodeStatus::Aborted})
    if (to_string(st) == s) return st;
  throw SchemaError("$.status", "unknown status '" + s + "'");
}

}  // namespace

std::string to_string(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::Running: return "running";
    case EpisodeStatus::Submitted: return "submitted";
    case EpisodeStatus::StepLimit: return "step_limit";
    case EpisodeStatus::CostLimit: return "cost_limit";
    case EpisodeStatus::Aborted: return "aborted";
  }
  return "aborted";
}

std::vector<ScheduledEdit> scheduled_edits_from_json(const Json& doc) {
  if (!doc.is_array()) throw SchemaError("$", "array of scheduled edits required");
  std::vector<ScheduledEdit> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string loc = "$[" + std::to_string(i) + "]";
    const Json& e = doc[i];
    if (!e.is_object()) throw SchemaError(loc, "object required");
    reject_unknown_keys(e, {"after_step", "file", "line_start", "line_end", "replacement"}, loc);
    try {
      out.push_back({e.at("after_step").get<std::size_t>(),
                     {e.at("file").get<std::string>(), e.at("line_start").get<std::size_t>(),
                      e.at("line_end").get<std::size_t>(), e.value("replacement", "")}});
    } catch (const Json::exception& ex) {
      throw SchemaError(loc, ex.what());
    }
  }
  return out;
}

std::string system_prompt(std::size_t window_lines) {
  std::string docs = replace_all(std::string(kCommandDocs), "{WINDOW}", std::to_string(window_lines));
  return "SETTING: You are an autonomous programmer specializing in refactoring, and you're working directly in the "
         "command line with a special interface.\n"
         "The special interface consists of a file editor that shows you " +
         std::to_string(window_lines) +
         " lines of a file at a time.\n"
         "In addition to typical bash commands, you can also use the following commands to help you navigate and "
         "edit files.\n\nCOMMANDS:\n" +
         docs +
         "\nPlease note that THE EDIT COMMAND REQUIRES PROPER INDENTATION.\n"
         "\nRESPONSE FORMAT:\n"
         "Your shell prompt is formatted as follows:\n"
         "(Open file: <path>) <cwd>\n\n"
         "You need to format your output using two fields: discussion and command.\n"
         "Your output should always include _one_ discussion and _one_ command field EXACTLY as in the following "
         "example:\n"
         "DISCUSSION\n"
         "First I'll start by using ls to see what files are in the current directory. Then maybe we can look at "
         "some relevant files to see what they look like.\n"
         "```\nls -a\n```\n\n"
         "You should only include a *SINGLE* command in the command section and then wait for a response from the "
         "shell before continuing with more discussion and commands.";
}

std::string instance_prompt(const std::string& instruction) {
  return "We're currently solving the following issue within our repository. Here's the issue text:\n"
         "ISSUE:\n" +
         instruction +
         "\n\nINSTRUCTIONS:\n"
         "Now, you're going to solve this refactoring issue on your own. Your terminal session has started and "
         "you're in the repository's root directory. You can use any bash commands or the special interface to help "
         "you. Edit all the files you need to.\n"
         "Remember, YOU CAN ONLY ENTER ONE COMMAND AT A TIME. You should always wait for feedback after every "
         "command.\n"
         "When you're satisfied with all of the changes you've made, you can submit your changes to the code base by "
         "simply running the submit command.";
}

std::string elided_observation(const Observation& o) {
  return "Old environment output: (" + std::to_string(line_count(o.text)) + " lines omitted)";
}

std::vector<lmclient::Message> window_context(const Trajectory& t, const StatePolicy& policy,
                                              std::size_t window_lines) {
  std::vector<lmclient::Message> out;
  out.push_back({"system", system_prompt(window_lines)});
  out.push_back({"user", user_message(instance_prompt(t.instruction), policy, t.initial_state)});
  const std::size_t n = t.steps.size();
  const std::size_t w = std::max<std::size_t>(t.window, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Step& s = t.steps[i];
    out.push_back({"assistant", s.action.response});
    if (n - i <= w) out.push_back({"user", user_message(s.observation.text, policy, s.state)});
    else out.push_back({"user", elided_observation(s.observation)});
  }
  return out;
}

Episode::Episode(std::string task_id, std::string instruction, std::string working_dir, evaluator::FileMap files,
                 lmclient::Client& client, const StatePolicy& policy, EpisodeConfig config)
    : initial_(files),
      env_(working_dir, std::move(files), config.env),
      client_(client),
      policy_(policy),
      config_(std::move(config)) {
  trajectory_.task_id = std::move(task_id);
  trajectory_.instruction = std::move(instruction);
  trajectory_.model = config_.model;
  trajectory_.policy = policy_.name();
  trajectory_.window = config_.window;
  trajectory_.initial_state = policy_.update({}, {StateSummary{working_dir, "n/a", {}, {}}}, {});
  for (const auto& s : config_.external_edits)
    if (s.after_step == 0) inject_external_edit(s.edit);
}

void Episode::inject_external_edit(const ExternalEdit& event) {
  if (done()) throw EpisodeClosed("episode already " + to_string(trajectory_.status));
  env_.apply_external(event);
  pending_.push_back(event);
}

bool Episode::step() {
  if (done()) return false;
  const std::size_t n = trajectory_.steps.size() + 1;
  lmclient::ChatRequest req{window_context(trajectory_, policy_, config_.env.window_lines), 0.0, 1024, config_.model};
  lmclient::ChatResponse reply;
  try {
    reply = client_.complete(req);
  } catch (const lmclient::LmFailure& e) {
    trajectory_.status = EpisodeStatus::Aborted;
    trajectory_.abort_reason = e.what();
    return false;
  }
  trajectory_.usage += reply.usage;

  Step s;
  try {
    s.action = parse_action(reply.text, n);
    s.observation = env_.step(*s.action.command);
  } catch (const FormatViolation& e) {
    s.action = Action{n, reply.text, "", std::nullopt};
    s.observation.text = e.what();
    s.observation.open_file = env_.open_file_display();
    s.observation.working_dir = env_.working_dir();
  }
  s.observation.index = n;
  s.external_events = std::move(pending_);
  pending_.clear();

  std::vector<StateSummary> prior{trajectory_.initial_state};
  for (const auto& st : trajectory_.steps) prior.push_back(st.state);
  trajectory_.steps.push_back(std::move(s));
  Step& added = trajectory_.steps.back();
  added.state = policy_.update(trajectory_.steps, prior, added.external_events);

  if (added.action.command && added.action.command->kind == CommandKind::Submit)
    trajectory_.status = EpisodeStatus::Submitted;
  else if (config_.budget && trajectory_.usage.total() >= config_.budget)
    trajectory_.status = EpisodeStatus::CostLimit;
  else if (n >= config_.max_steps)
    trajectory_.status = EpisodeStatus::StepLimit;

  if (!done())
    for (const auto& sched : config_.external_edits)
      if (sched.after_step == n) inject_external_edit(sched.edit);
  return true;
}

void Episode::run() {
  while (step()) {
  }
}

std::string Episode::patch() const { return evaluator::make_patch(initial_, env_.files()); }

EpisodeResult run_episode(const taskspec::TaskInstance& task, lmclient::Client& client, const StatePolicy& policy,
                          EpisodeConfig config) {
  const auto& ins = task.instructions;
  const std::string& instruction = config.instruction_set == "lazy"          ? ins.lazy
                                   : config.instruction_set == "descriptive" ? ins.descriptive
                                                                             : ins.base;
  Episode ep(task.id, instruction, task.repo_id, evaluator::to_file_map(task.snapshot.load_files()), client, policy,
             std::move(config));
  ep.run();
  return {ep.trajectory(), ep.patch()};
}

// ---------------------------------------------------------------- logs

Json export_trajectory(const Trajectory& t) {
  auto policy = make_policy(t.policy);
  Json history = Json::array();
  for (const auto& s : t.steps) {
    history.push_back({{"role", "assistant"},
                       {"content", s.action.response},
                       {"thought", s.action.discussion},
                       {"action", s.action.command ? s.action.command->raw + "\n" : ""}});
    Json user = {{"role", "user"},
                 {"content", user_message(s.observation.text, *policy, s.state)},
                 {"observation", s.observation.text},
                 {"truncated", s.observation.truncated}};
    if (s.observation.edit)
      user["edit"] = {{"file", s.observation.edit->file},
                      {"line_start", s.observation.edit->line_start},
                      {"line_end", s.observation.edit->line_end}};
    user["open_file"] = s.observation.open_file;
    user["working_dir"] = s.observation.working_dir;
    if (!s.external_events.empty()) {
      user["external_events"] = Json::array();
      for (const auto& e : s.external_events) user["external_events"].push_back(edit_json(e));
    }
    user["state"] = state_document(s.state);
    history.push_back(std::move(user));
  }
  Json doc = {{"schema_version", kTrajectorySchemaVersion},
              {"task_id", t.task_id},
              {"instruction", t.instruction},
              {"model", t.model},
              {"policy", t.policy},
              {"window", t.window},
              {"status", to_string(t.status)}};
  if (t.abort_reason) doc["abort_reason"] = *t.abort_reason;
  doc["usage"] = {{"prompt", t.usage.prompt}, {"completion", t.usage.completion}};
  doc["initial_state"] = state_document(t.initial_state);
  doc["history"] = std::move(history);
  return doc;
}

Trajectory import_trajectory(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "trajectory must be an object");
  reject_unknown_keys(doc,
                      {"schema_version", "task_id", "instruction", "model", "policy", "window", "status",
                       "abort_reason", "usage", "initial_state", "history"},
                      "$");
  if (doc.value("schema_version", "") != kTrajectorySchemaVersion)
    throw SchemaError("$.schema_version", "expected " + std::string(kTrajectorySchemaVersion));
  Trajectory t;
  try {
    t.task_id = doc.at("task_id").get<std::string>();
    t.instruction = doc.at("instruction").get<std::string>();
    t.model = doc.at("model").get<std::string>();
    t.policy = doc.at("policy").get<std::string>();
    make_policy(t.policy);
    t.window = doc.at("window").get<std::size_t>();
    t.status = status_from(doc.at("status").get<std::string>());
    if (doc.contains("abort_reason")) t.abort_reason = doc["abort_reason"].get<std::string>();
    t.usage = {doc.at("usage").at("prompt").get<std::size_t>(), doc.at("usage").at("completion").get<std::size_t>()};
    t.initial_state = state_from_document(doc.at("initial_state").get<std::string>());
    const Json& h = doc.at("history");
    if (!h.is_array() || h.size() % 2) throw SchemaError("$.history", "expected assistant/user record pairs");
    for (std::size_t i = 0; i < h.size(); i += 2) {
      const std::string loc = "$.history[" + std::to_string(i) + "]";
      const Json& a = h[i];
      const Json& u = h[i + 1];
      if (a.at("role") != "assistant" || u.at("role") != "user")
        throw SchemaError(loc, "records must alternate assistant, user");
      Step s;
      s.action.index = i / 2 + 1;
      s.action.response = a.at("content").get<std::string>();
      s.action.discussion = a.at("thought").get<std::string>();
      std::string raw = a.at("action").get<std::string>();
      if (!raw.empty()) {
        if (raw.ends_with('\n')) raw.pop_back();
        s.action.command = parse_command(raw);
      }
      s.observation.index = s.action.index;
      s.observation.text = u.at("observation").get<std::string>();
      s.observation.truncated = u.at("truncated").get<bool>();
      if (u.contains("edit"))
        s.observation.edit = EditSpan{u["edit"].at("file").get<std::string>(), u["edit"].at("line_start").get<std::size_t>(),
                                      u["edit"].at("line_end").get<std::size_t>()};
      s.observation.open_file = u.at("open_file").get<std::string>();
      s.observation.working_dir = u.at("working_dir").get<std::string>();
      if (u.contains("external_events"))
        for (const auto& e : u["external_events"])
          s.external_events.push_back({e.at("file").get<std::string>(), e.at("line_start").get<std::size_t>(),
                                       e.at("line_end").get<std::size_t>(), e.at("replacement").get<std::string>()});
      s.state = state_from_document(u.at("state").get<std::string>());
      t.steps.push_back(std::move(s));
    }
  } catch (const Json::exception& e) {
    throw SchemaError("$", e.what());
  } catch (const FormatViolation& e) {
    throw SchemaError("$.history", std::string("unparseable action: ") + e.what());
  }
  return t;
}

std::string trajectory_digest(const Trajectory& t) { return sha256_digest(export_trajectory(t).dump()); }

bool states_recompute(const Trajectory& t, const StatePolicy& policy) {
  std::vector<Step> prefix;
  std::vector<StateSummary> prior{t.initial_state};
  for (const auto& s : t.steps) {
    prefix.push_back(s);
    prefix.back().state = {};
    if (policy.update(prefix, prior, s.external_events) != s.state) return false;
    prior.push_back(s.state);
  }
  return true;
}

}  // namespace refactorkit::harness
