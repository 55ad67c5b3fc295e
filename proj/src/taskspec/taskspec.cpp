#include "refactorkit/taskspec.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace refactorkit::taskspec {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLazyTemplate =
    "Please convert the following instruction to be less specific. Do not change the behavior of the task, but "
    "give a short, less descriptive version of the task in human-like prose. Your final instruction should be a "
    "partial sentence and should not instruct to run any tests. It should just describe the changes to the "
    "repository. Do not output ANYTHING ELSE BUT THE NEW INSTRUCTION. Here is the original instruction:\n"
    "\n"
    "{base_instruction}\n"
    "\n"
    "Here are examples of lazy instructions: \n"
    "\n"
    "{few_shot_lazy}\n"
    "\n"
    "Remember to only output the NEW LAZY INSTRUCTION CORRESPONDING TO THE BASE TASK.\n";

constexpr std::string_view kDescriptiveTemplate =
    "Please convert the following instruction to be more specific and have specific filenames for edits (not "
    "paths). Do not change the behavior of the task, but give a longer, more descriptive version of the task in "
    "human-like specifications. Reason over the AST tests provided to give more information on which files could "
    "be relevant, but do not give exact implementation details or anything related to what generalizations the "
    "tests are looking for. Your final instruction should be around 2-3 full sentences and should not say to run "
    "any tests or anything like that. It should just describe the changes to the repository. Do not output "
    "ANYTHING ELSE BUT THE NEW INSTRUCTION. Here is the original instruction and its related test file:\n"
    "\n"
    "{base_instruction}\n"
    "\n"
    "Test File Starts Here: \n"
    "\n"
    "{inst_test_file}\n"
    "\n"
    "End of Test File.\n"
    "\n"
    "Here are examples of descriptive instructions: \n"
    "\n"
    "{few_shot_desc}\n"
    "\n"
    "Remember to only output the NEW DESCRIPTIVE INSTRUCTION CORRESPONDING TO THE BASE TASK.\n";

std::string want_string(const Json& obj, const std::string& key, const std::string& loc) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(loc, "missing mandatory field '" + key + "'");
  if (!it->is_string() || it->get<std::string>().empty()) {
    throw SchemaError(loc + "." + key, "expected a non-empty string");
  }
  return it->get<std::string>();
}

Snapshot make_snapshot(const Json& repo, const fs::path& base_dir, const std::string& loc) {
  Snapshot s;
  s.ref = want_string(repo, "snapshot", loc);
  s.resolved = base_dir / s.ref;
  std::optional<std::string> declared;
  if (repo.contains("digest")) declared = want_string(repo, "digest", loc);
  if (s.is_archive()) {
    const fs::path sidecar = fs::path(s.resolved.string() + ".sha256");
    if (fs::exists(sidecar)) {
      std::string side = read_file(sidecar);
      side.erase(side.find_last_not_of(" \n\r\t") + 1);
      if (declared && *declared != side) throw DigestMismatch(s.ref, *declared, side);
      declared = side;
    }
  }
  if (!declared) throw SchemaError(loc, "snapshot '" + s.ref + "' has no digest");
  if (!fs::exists(s.resolved)) throw SchemaError(loc + ".snapshot", "snapshot '" + s.ref + "' does not exist");
  s.digest = *declared;
  const std::string actual = s.compute_digest();
  if (actual != s.digest) throw DigestMismatch(s.ref, s.digest, actual);
  return s;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  // Sort first so the mean does not depend on task order.
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0;
  for (const double v : sorted) sum += v;
  a.mean = sum / static_cast<double>(sorted.size());
  a.max = sorted.back();
  return a;
}

Json aggregate_json(const Aggregate& a) { return Json{{"mean", a.mean}, {"max", a.max}}; }

std::size_t line_count(std::string_view text) {
  std::size_t n = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  if (!text.empty() && text.back() != '\n') ++n;
  return n;
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::optional<std::string>>& values) {
  static const std::regex kPlaceholder(R"(\{([a-z_]+)\})");
  std::string out;
  const std::string text(tmpl);
  auto begin = std::sregex_iterator(text.begin(), text.end(), kPlaceholder);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(text, last, static_cast<std::size_t>(m.position()) - last);
    const auto found = values.find(m[1].str());
    if (found == values.end() || !found->second) throw MissingPlaceholder(m[1].str());
    out += *found->second;
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(text, last);
  return out;
}

}  // namespace

DigestMismatch::DigestMismatch(std::string what_ref, std::string exp, std::string act)
    : std::runtime_error("digest mismatch for " + what_ref + ": expected " + exp + ", found " + act),
      ref(std::move(what_ref)),
      expected(std::move(exp)),
      actual(std::move(act)) {}

MissingPlaceholder::MissingPlaceholder(std::string name)
    : std::runtime_error("missing placeholder {" + name + "}"), placeholder(std::move(name)) {}

bool Snapshot::is_archive() const { return resolved.extension() == ".tar"; }

std::vector<FileEntry> Snapshot::load_files() const {
  if (is_archive()) return read_tar(resolved);
  std::vector<FileEntry> files;
  for (auto& rel : list_files(resolved)) {
    std::string content = read_file(resolved / rel);
    files.push_back({std::move(rel), std::move(content)});
  }
  return files;
}

std::string Snapshot::compute_digest() const { return files_digest(load_files()); }

const TaskInstance& CorpusManifest::task(const std::string& id) const {
  for (const auto& t : tasks) {
    if (t.id == id) return t;
  }
  throw UnknownTask("unknown task '" + id + "'");
}

const RepoEntry* CorpusManifest::repo(const std::string& repo_id) const {
  for (const auto& r : repos) {
    if (r.repo_id == repo_id) return &r;
  }
  return nullptr;
}

CorpusManifest load_manifest(std::string_view document, const fs::path& base_dir) {
  Json j;
  try {
    j = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw SchemaError("$", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("$", "manifest must be an object");
  reject_unknown_keys(j, {"schema_version", "corpus", "grammar_version", "repos", "tasks"}, "$");
  if (want_string(j, "schema_version", "$") != kManifestSchemaVersion) {
    throw SchemaError("$.schema_version", "unsupported schema version");
  }
  CorpusManifest m;
  m.base_dir = base_dir;
  m.corpus = want_string(j, "corpus", "$");
  m.grammar_version = want_string(j, "grammar_version", "$");
  if (m.grammar_version != pytree::kGrammarVersion) {
    throw SchemaError("$.grammar_version",
                      "grammar " + m.grammar_version + " is not supported (parser implements " +
                          std::string(pytree::kGrammarVersion) + ")");
  }
  if (!j.contains("repos") || !j.at("repos").is_array()) throw SchemaError("$.repos", "expected an array");
  if (!j.contains("tasks") || !j.at("tasks").is_array()) throw SchemaError("$.tasks", "expected an array");

  const Json& repos = j.at("repos");
  for (std::size_t i = 0; i < repos.size(); ++i) {
    const std::string loc = "$.repos[" + std::to_string(i) + "]";
    if (!repos[i].is_object()) throw SchemaError(loc, "expected an object");
    reject_unknown_keys(repos[i], {"repo_id", "snapshot", "digest"}, loc);
    RepoEntry r{want_string(repos[i], "repo_id", loc), {}};
    if (m.repo(r.repo_id)) throw SchemaError(loc + ".repo_id", "duplicate repo_id '" + r.repo_id + "'");
    r.snapshot = make_snapshot(repos[i], base_dir, loc);
    m.repos.push_back(std::move(r));
  }

  const Json& tasks = j.at("tasks");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string loc = "$.tasks[" + std::to_string(i) + "]";
    const Json& t = tasks[i];
    if (!t.is_object()) throw SchemaError(loc, "expected an object");
    reject_unknown_keys(t, {"id", "repo_id", "instructions", "suite_ref", "metadata"}, loc);
    TaskInstance task;
    task.id = want_string(t, "id", loc);
    if (!ids.insert(task.id).second) throw SchemaError(loc + ".id", "duplicate task id '" + task.id + "'");
    task.repo_id = want_string(t, "repo_id", loc);
    const RepoEntry* repo = m.repo(task.repo_id);
    if (!repo) throw SchemaError(loc + ".repo_id", "repo '" + task.repo_id + "' is not listed in repos");
    task.snapshot = repo->snapshot;
    if (!t.contains("instructions") || !t.at("instructions").is_object()) {
      throw SchemaError(loc + ".instructions", "expected an object");
    }
    const Json& ins = t.at("instructions");
    const std::string iloc = loc + ".instructions";
    reject_unknown_keys(ins, {"lazy", "base", "descriptive"}, iloc);
    task.instructions = {want_string(ins, "lazy", iloc), want_string(ins, "base", iloc),
                         want_string(ins, "descriptive", iloc)};
    task.suite_ref = want_string(t, "suite_ref", loc);
    task.suite_path = base_dir / task.suite_ref;
    if (!fs::is_regular_file(task.suite_path)) {
      throw SchemaError(loc + ".suite_ref", "suite '" + task.suite_ref + "' does not resolve");
    }
    try {
      task.suite = assertlang::load_suite(read_file(task.suite_path));
    } catch (const SchemaError& e) {
      throw SchemaError(task.suite_ref + ":" + e.location, e.reason);
    }
    if (task.suite.task_id != task.id) {
      throw SchemaError(loc + ".suite_ref", "suite task_id '" + task.suite.task_id + "' does not match '" + task.id + "'");
    }
    if (t.contains("metadata")) {
      if (!t.at("metadata").is_object()) throw SchemaError(loc + ".metadata", "expected an object");
      task.metadata = t.at("metadata");
    }
    m.tasks.push_back(std::move(task));
  }
  return m;
}

CorpusManifest load_manifest_file(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoFailure& e) {
    throw SchemaError(path.string(), e.what());
  }
  return load_manifest(text, path.parent_path());
}

Json serialize_manifest(const CorpusManifest& m) {
  Json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["corpus"] = m.corpus;
  j["grammar_version"] = m.grammar_version;
  Json repos = Json::array();
  for (const auto& r : m.repos) {
    repos.push_back({{"repo_id", r.repo_id}, {"snapshot", r.snapshot.ref}, {"digest", r.snapshot.digest}});
  }
  j["repos"] = repos;
  Json tasks = Json::array();
  for (const auto& t : m.tasks) {
    Json o;
    o["id"] = t.id;
    o["repo_id"] = t.repo_id;
    o["instructions"] = {{"lazy", t.instructions.lazy},
                         {"base", t.instructions.base},
                         {"descriptive", t.instructions.descriptive}};
    o["suite_ref"] = t.suite_ref;
    o["metadata"] = t.metadata;
    tasks.push_back(o);
  }
  j["tasks"] = tasks;
  return j;
}

CorpusStats corpus_stats(const CorpusManifest& m) {
  if (m.tasks.empty()) throw EmptyCorpus();
  std::map<std::string, std::pair<double, double>> repo_sizes;
  for (const auto& r : m.repos) {
    double files = 0;
    double lines = 0;
    for (const auto& f : r.snapshot.load_files()) {
      files += 1;
      lines += static_cast<double>(line_count(f.content));
    }
    repo_sizes[r.repo_id] = {files, lines};
  }
  std::vector<double> lazy, base, desc, rfiles, rlines, targets, lengths;
  std::set<std::string> used_repos;
  for (const auto& t : m.tasks) {
    lazy.push_back(static_cast<double>(word_count(t.instructions.lazy)));
    base.push_back(static_cast<double>(word_count(t.instructions.base)));
    desc.push_back(static_cast<double>(word_count(t.instructions.descriptive)));
    rfiles.push_back(repo_sizes.at(t.repo_id).first);
    rlines.push_back(repo_sizes.at(t.repo_id).second);
    targets.push_back(static_cast<double>(derive_target_files(t.suite).size()));
    lengths.push_back(static_cast<double>(t.suite.assertions.size()));
    used_repos.insert(t.repo_id);
  }
  CorpusStats s;
  s.task_count = m.tasks.size();
  s.repo_count = used_repos.size();
  s.lazy_words = aggregate(lazy);
  s.base_words = aggregate(base);
  s.descriptive_words = aggregate(desc);
  s.repo_files = aggregate(rfiles);
  s.repo_lines = aggregate(rlines);
  s.target_files = aggregate(targets);
  s.suite_length = aggregate(lengths);
  return s;
}

Json stats_json(const CorpusStats& s) {
  Json j;
  j["schema_version"] = "refactorkit.stats/1";
  j["tasks"] = s.task_count;
  j["repos"] = s.repo_count;
  j["lazy_instruction_words"] = aggregate_json(s.lazy_words);
  j["base_instruction_words"] = aggregate_json(s.base_words);
  j["descriptive_instruction_words"] = aggregate_json(s.descriptive_words);
  j["codebase_files"] = aggregate_json(s.repo_files);
  j["codebase_lines"] = aggregate_json(s.repo_lines);
  j["target_files"] = aggregate_json(s.target_files);
  j["suite_length"] = aggregate_json(s.suite_length);
  return j;
}

PseudoTask compose_pseudotask(const CorpusManifest& m, const std::vector<std::string>& task_ids) {
  if (task_ids.size() < 2) throw std::invalid_argument("a pseudotask needs at least two tasks");
  PseudoTask p;
  std::set<std::string> seen;
  for (const auto& id : task_ids) {
    const TaskInstance& t = m.task(id);
    if (!seen.insert(id).second) throw std::invalid_argument("task '" + id + "' listed twice");
    if (p.repo_id.empty()) {
      p.repo_id = t.repo_id;
    } else if (p.repo_id != t.repo_id) {
      throw MixedRepo("task '" + id + "' belongs to repo '" + t.repo_id + "', not '" + p.repo_id + "'");
    }
    if (!p.combined_instruction.empty()) p.combined_instruction += "\n";
    p.combined_instruction += t.instructions.descriptive;
    std::string prefix = id;
    std::replace(prefix.begin(), prefix.end(), '-', '_');
    for (auto a : t.suite.assertions) {
      a.id = prefix + "__" + a.id;
      p.suite.assertions.push_back(std::move(a));
    }
    p.task_ids.push_back(id);
  }
  std::string joined;
  for (const auto& id : p.task_ids) joined += (joined.empty() ? "" : "+") + id;
  p.suite.task_id = "pseudo:" + joined;
  return p;
}

Json pseudotask_json(const PseudoTask& p) {
  Json j;
  j["schema_version"] = "refactorkit.pseudotask/1";
  j["task_ids"] = p.task_ids;
  j["repo_id"] = p.repo_id;
  j["combined_instruction"] = p.combined_instruction;
  j["suite"] = assertlang::serialize_suite(p.suite);
  return j;
}

std::set<std::string> derive_target_files(const assertlang::AssertionSuite& suite) {
  std::set<std::string> out;
  for (const auto& a : suite.assertions) out.insert(a.path);
  return out;
}

std::vector<Overlap> overlap_report(const CorpusManifest& m) {
  std::vector<Overlap> out;
  for (std::size_t i = 0; i < m.tasks.size(); ++i) {
    const auto a = derive_target_files(m.tasks[i].suite);
    for (std::size_t k = i + 1; k < m.tasks.size(); ++k) {
      if (m.tasks[i].repo_id != m.tasks[k].repo_id) continue;
      const auto b = derive_target_files(m.tasks[k].suite);
      Overlap o{m.tasks[i].id, m.tasks[k].id, {}};
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(o.shared_files));
      if (!o.shared_files.empty()) out.push_back(std::move(o));
    }
  }
  return out;
}

std::string render_instruction_prompt(InstructionKind kind, const std::string& base_instruction,
                                       const std::string& few_shots, const std::optional<std::string>& suite_text) {
  if (kind == InstructionKind::Lazy) {
    return fill(kLazyTemplate, {{"base_instruction", base_instruction}, {"few_shot_lazy", few_shots}});
  }
  return fill(kDescriptiveTemplate,
              {{"base_instruction", base_instruction}, {"inst_test_file", suite_text}, {"few_shot_desc", few_shots}});
}

}  // namespace refactorkit::taskspec
