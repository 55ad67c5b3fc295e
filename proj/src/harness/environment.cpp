#include <algorithm>
#include <fnmatch.h>

#include "refactorkit/harness.hpp"

namespace refactorkit::harness {

namespace {

struct Lines {
  std::vector<std::string> lines;
  bool final_newline = true;
};

Lines to_lines(const std::string& text) { return {split_lines(text), text.empty() || text.back() == '\n'}; }

std::string join(const Lines& l) {
  std::string out;
  for (std::size_t i = 0; i < l.lines.size(); ++i) {
    out += l.lines[i];
    if (i + 1 < l.lines.size() || l.final_newline) out += '\n';
  }
  return out;
}

// Replaces lines [a, b] (1-based, b may be a-1 for a pure insertion) with `replacement`.
std::string splice(const std::string& text, std::size_t a, std::size_t b, const std::string& replacement) {
  Lines l = to_lines(text);
  const bool touches_end = b >= l.lines.size();
  auto repl = split_lines(replacement);
  l.lines.erase(l.lines.begin() + static_cast<std::ptrdiff_t>(a - 1), l.lines.begin() + static_cast<std::ptrdiff_t>(b));
  l.lines.insert(l.lines.begin() + static_cast<std::ptrdiff_t>(a - 1), repl.begin(), repl.end());
  if (touches_end) l.final_newline = true;
  return join(l);
}

std::vector<std::string> shell_words(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  char quote = 0;
  bool in_word = false;
  for (const char c : raw) {
    if (quote) {
      if (c == quote) quote = 0;
      else cur += c;
    } else if (c == '"' || c == '\'') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      if (in_word) out.push_back(cur);
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (in_word) out.push_back(cur);
  return out;
}

bool under(const std::string& path, const std::string& dir) {
  return dir.empty() || path == dir || path.starts_with(dir + "/");
}

}  // namespace

Environment::Environment(std::string working_dir, evaluator::FileMap files, EnvConfig config)
    : working_dir_(std::move(working_dir)), files_(std::move(files)), config_(config) {}

std::string Environment::open_file_display() const {
  return open_ ? "/" + working_dir_ + "/" + *open_ : "n/a";
}

// Repo-relative form of an agent-supplied path; "" is the root.
std::optional<std::string> Environment::resolve(const std::string& raw) const {
  std::string p = raw;
  const std::string root = "/" + working_dir_;
  if (p == root || p == "." || p == "./" || p == working_dir_ || p == root + "/") return std::string();
  if (p.starts_with(root + "/")) p = p.substr(root.size() + 1);
  else if (p.starts_with(working_dir_ + "/")) p = p.substr(working_dir_.size() + 1);
  while (p.starts_with("./")) p = p.substr(2);
  while (p.ends_with('/')) p.pop_back();
  if (p.starts_with('/') || p == ".." || p.starts_with("../") || p.find("/../") != std::string::npos) return std::nullopt;
  return p;
}

std::string Environment::show_window() {
  const auto& text = files_.at(*open_);
  const auto lines = split_lines(text);
  const std::size_t n = lines.size();
  std::string out = "[File: " + open_file_display() + " (" + std::to_string(n) + " lines total)]\n";
  if (n == 0) return out;
  const std::size_t w = config_.window_lines;
  first_line_ = std::clamp<std::size_t>(first_line_, 1, n > w ? n - w + 1 : 1);
  const std::size_t last = std::min(n, first_line_ + w - 1);
  if (first_line_ > 1) out += "(" + std::to_string(first_line_ - 1) + " more lines above)\n";
  for (std::size_t i = first_line_; i <= last; ++i) out += std::to_string(i) + ":" + lines[i - 1] + "\n";
  if (last < n) out += "(" + std::to_string(n - last) + " more lines below)\n";
  return out;
}

std::string Environment::search(const ToolCommand& cmd) {
  const std::string shown_root = "/" + working_dir_;
  if (cmd.search_mode == "search_file") {
    std::string file;
    if (!cmd.path.empty()) {
      auto p = resolve(cmd.path);
      if (!p || !files_.count(*p)) return "Error: File name " + cmd.path + " not found. Please provide a valid file name.";
      file = *p;
    } else if (open_) {
      file = *open_;
    } else {
      return "No file open. Use the open command first.";
    }
    std::vector<std::string> hits;
    const auto lines = split_lines(files_.at(file));
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (lines[i].find(cmd.text) != std::string::npos) hits.push_back("Line " + std::to_string(i + 1) + ":" + lines[i]);
    const std::string where = shown_root + "/" + file;
    if (hits.empty()) return "No matches found for \"" + cmd.text + "\" in " + where;
    if (hits.size() > config_.search_limit)
      return "More than " + std::to_string(config_.search_limit) + " lines matched for \"" + cmd.text + "\" in " + where +
             ". Please narrow your search.";
    std::string out = "Found " + std::to_string(hits.size()) + " matches for \"" + cmd.text + "\" in " + where + ":\n";
    for (const auto& h : hits) out += h + "\n";
    return out + "End of matches for \"" + cmd.text + "\" in " + where;
  }

  auto dir = resolve(cmd.path.empty() ? "." : cmd.path);
  if (!dir) return "Directory " + cmd.path + " not found";
  bool any_dir = dir->empty();
  for (const auto& [path, text] : files_)
    if (under(path, *dir) && path != *dir) any_dir = true;
  if (!any_dir) return "Directory " + cmd.path + " not found";
  const std::string where = dir->empty() ? shown_root : shown_root + "/" + *dir;

  if (cmd.search_mode == "find_file") {
    std::vector<std::string> hits;
    for (const auto& [path, text] : files_)
      if (under(path, *dir) && fnmatch(cmd.text.c_str(), basename_of(path).c_str(), 0) == 0)
        hits.push_back(shown_root + "/" + path);
    if (hits.empty()) return "No matches found for \"" + cmd.text + "\" in " + where;
    std::string out = "Found " + std::to_string(hits.size()) + " matches for \"" + cmd.text + "\" in " + where + ":\n";
    for (const auto& h : hits) out += h + "\n";
    return out;
  }

  std::vector<std::pair<std::string, std::size_t>> hits;
  std::size_t total = 0;
  for (const auto& [path, text] : files_) {
    if (!under(path, *dir)) continue;
    std::size_t count = 0;
    for (const auto& line : split_lines(text))
      if (line.find(cmd.text) != std::string::npos) ++count;
    if (count) {
      hits.emplace_back(path, count);
      total += count;
    }
  }
  if (hits.empty()) return "No matches found for \"" + cmd.text + "\" in " + where;
  if (hits.size() > config_.search_limit)
    return "More than " + std::to_string(config_.search_limit) + " files matched for \"" + cmd.text + "\" in " + where +
           ". Please narrow your search.";
  std::string out = "Found " + std::to_string(total) + " matches for \"" + cmd.text + "\" in " + where + ":\n";
  for (const auto& [path, count] : hits) out += shown_root + "/" + path + " (" + std::to_string(count) + " matches)\n";
  return out + "End of matches for \"" + cmd.text + "\" in " + where;
}

std::string Environment::run_shell(const std::string& raw) {
  const auto argv = shell_words(raw);
  if (argv.empty()) return "";
  const std::string& prog = argv[0];
  std::vector<std::string> flags, args;
  for (std::size_t i = 1; i < argv.size(); ++i) (argv[i].starts_with('-') ? flags : args).push_back(argv[i]);
  auto has_flag = [&](char f) {
    return std::any_of(flags.begin(), flags.end(), [&](const std::string& s) { return s.find(f) != std::string::npos; });
  };

  if (prog == "pwd") return "/" + working_dir_;
  if (prog == "cd") {
    auto target = resolve(args.empty() ? "." : args[0]);
    if (target && target->empty()) return "";
    return "bash: cd: changing directories is not supported here; paths are relative to /" + working_dir_;
  }
  if (prog == "ls") {
    auto dir = resolve(args.empty() ? "." : args[0]);
    if (!dir) return "ls: cannot access '" + args[0] + "': No such file or directory";
    if (!dir->empty() && files_.count(*dir)) return args[0];
    std::set<std::string> entries;
    for (const auto& [path, text] : files_) {
      if (!under(path, *dir) || path == *dir) continue;
      std::string rest = dir->empty() ? path : path.substr(dir->size() + 1);
      auto slash = rest.find('/');
      entries.insert(slash == std::string::npos ? rest : rest.substr(0, slash) + (has_flag('F') ? "/" : ""));
    }
    if (entries.empty()) return "ls: cannot access '" + args[0] + "': No such file or directory";
    std::string out;
    for (const auto& e : entries)
      if (has_flag('a') || !e.starts_with('.')) out += e + "\n";
    if (!out.empty()) out.pop_back();
    return out;
  }
  if (prog == "cat") {
    if (args.empty()) return "cat: missing file operand";
    std::string out;
    for (const auto& a : args) {
      auto p = resolve(a);
      if (!p || !files_.count(*p)) out += "cat: " + a + ": No such file or directory\n";
      else out += files_.at(*p);
    }
    return out;
  }
  if (prog == "find") {
    std::string root = ".";
    std::string pattern = "*";
    for (std::size_t i = 1; i < argv.size(); ++i) {
      if (argv[i] == "-name" && i + 1 < argv.size()) pattern = argv[++i];
      else if (argv[i] == "-type" && i + 1 < argv.size()) ++i;
      else if (!argv[i].starts_with('-')) root = argv[i];
    }
    auto dir = resolve(root);
    if (!dir) return "find: '" + root + "': No such file or directory";
    std::string out;
    for (const auto& [path, text] : files_)
      if (under(path, *dir) && fnmatch(pattern.c_str(), basename_of(path).c_str(), 0) == 0)
        out += (root == "." ? "./" : root + (root.ends_with('/') ? "" : "/")) +
               (dir->empty() ? path : path.substr(dir->size() + 1)) + "\n";
    if (!out.empty()) out.pop_back();
    return out;
  }
  if (prog == "grep") {
    if (args.empty()) return "Usage: grep [OPTION]... PATTERNS [FILE]...";
    const std::string& pattern = args[0];
    auto scope = resolve(args.size() > 1 ? args[1] : ".");
    if (!scope) return "grep: " + args[1] + ": No such file or directory";
    const bool numbered = has_flag('n');
    std::string out;
    for (const auto& [path, text] : files_) {
      if (!under(path, *scope)) continue;
      const auto lines = split_lines(text);
      for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find(pattern) != std::string::npos)
          out += path + ":" + (numbered ? std::to_string(i + 1) + ":" : "") + lines[i] + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
  }
  return "bash: " + prog + ": command not available in this environment";
}

std::string Environment::run(const ToolCommand& cmd, std::optional<EditSpan>& edit) {
  const std::size_t w = config_.window_lines;
  switch (cmd.kind) {
    case CommandKind::Open: {
      auto p = resolve(cmd.path);
      if (!p || !files_.count(*p)) return "File " + cmd.path + " not found";
      const std::size_t n = split_lines(files_.at(*p)).size();
      if (cmd.line > n && cmd.line > 1)
        return "Warning: <line_number> (" + std::to_string(cmd.line) + ") is greater than the number of lines in the file (" +
               std::to_string(n) + ")";
      open_ = *p;
      first_line_ = cmd.line ? (cmd.line > w / 2 ? cmd.line - w / 2 : 1) : 1;
      return show_window();
    }
    case CommandKind::Goto: {
      if (!open_) return "No file open. Use the open command first.";
      const std::size_t n = split_lines(files_.at(*open_)).size();
      if (cmd.line > n) return "Error: <line> must be less than or equal to " + std::to_string(n);
      first_line_ = cmd.line > w / 2 ? cmd.line - w / 2 : 1;
      return show_window();
    }
    case CommandKind::ScrollDown:
    case CommandKind::ScrollUp: {
      if (!open_) return "No file open. Use the open command first.";
      if (cmd.kind == CommandKind::ScrollDown) first_line_ += w;
      else first_line_ = first_line_ > w ? first_line_ - w : 1;
      return show_window();
    }
    case CommandKind::Search: return search(cmd);
    case CommandKind::Create: {
      auto p = resolve(cmd.path);
      if (!p || p->empty()) return "Error: invalid file name " + cmd.path;
      if (files_.count(*p)) return "Error: File '" + cmd.path + "' already exists.";
      for (const auto& [path, text] : files_)
        if (path.starts_with(*p + "/")) return "Error: '" + cmd.path + "' is a directory.";
      files_[*p] = "";
      open_ = *p;
      first_line_ = 1;
      return show_window();
    }
    case CommandKind::Edit: {
      if (!open_) return "No file open. Use the open command first.";
      std::string& text = files_.at(*open_);
      const std::size_t n = split_lines(text).size();
      if (cmd.line_start > n + 1)
        return "Error: start line " + std::to_string(cmd.line_start) + " is past the end of the file (" +
               std::to_string(n) + " lines)";
      text = splice(text, cmd.line_start, std::min(cmd.line_end, n), cmd.text);
      edit = EditSpan{*open_, cmd.line_start, cmd.line_end};
      first_line_ = cmd.line_start > w / 2 ? cmd.line_start - w / 2 : 1;
      return show_window() +
             "File updated. Please review the changes and make sure they are correct (correct indentation, no "
             "duplicate lines, etc). Edit the file again if necessary.";
    }
    case CommandKind::Submit: return "Submitting changes.";
    case CommandKind::Shell: return run_shell(cmd.raw);
  }
  return "";
}

Observation Environment::step(const ToolCommand& command) {
  Observation obs;
  obs.text = run(command, obs.edit);
  if (obs.text.size() > config_.max_observation_chars) {
    const std::size_t dropped = obs.text.size() - config_.max_observation_chars;
    obs.text.resize(config_.max_observation_chars);
    obs.text += "\n[Output truncated: " + std::to_string(dropped) + " more characters]";
    obs.truncated = true;
  }
  obs.open_file = open_file_display();
  obs.working_dir = working_dir_;
  return obs;
}

void Environment::apply_external(const ExternalEdit& event) {
  auto it = files_.find(event.file);
  if (it == files_.end()) throw InvalidRange("no such file: " + event.file);
  const std::size_t n = split_lines(it->second).size();
  if (event.line_start < 1 || event.line_start > event.line_end || event.line_end > n)
    throw InvalidRange(event.file + " has " + std::to_string(n) + " lines; cannot edit " +
                       std::to_string(event.line_start) + ":" + std::to_string(event.line_end));
  it->second = splice(it->second, event.line_start, event.line_end, event.replacement);
}

}  // namespace refactorkit::harness
