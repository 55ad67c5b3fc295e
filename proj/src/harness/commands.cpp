#include <charconv>

#include "refactorkit/harness.hpp"

namespace refactorkit::harness {

namespace {

constexpr std::string_view kFormatHelp =
    "Your output was not formatted correctly. You must always include one discussion and one command as part of "
    "your response. Make sure you do not have multiple discussion/command tags.\n"
    "Please make sure your output precisely matches the following format:\n"
    "DISCUSSION\n"
    "Discuss here with yourself about what you are planning and what you are going to do in this step.\n"
    "\n"
    "```\n"
    "command(s) that you're going to run\n"
    "```";

bool is_fence(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] == ' ') ++i;
  return line.substr(i).starts_with("```");
}

std::optional<std::size_t> to_size(std::string_view s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Whitespace split with double- and single-quote grouping.
std::vector<std::string> words(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (const char c : line) {
    if (quote) {
      if (c == quote) quote = 0;
      else cur += c;
    } else if (c == '"' || c == '\'') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      if (in_word) out.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (in_word) out.push_back(std::move(cur));
  return out;
}

[[noreturn]] void usage(const std::string& text) { throw FormatViolation("Usage: " + text); }

}  // namespace

FormatViolation::FormatViolation(std::string why) : std::runtime_error(why), reason(std::move(why)) {}

std::string to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::Open: return "open";
    case CommandKind::Goto: return "goto";
    case CommandKind::ScrollDown: return "scroll_down";
    case CommandKind::ScrollUp: return "scroll_up";
    case CommandKind::Search: return "search";
    case CommandKind::Create: return "create";
    case CommandKind::Edit: return "edit";
    case CommandKind::Submit: return "submit";
    case CommandKind::Shell: return "shell";
  }
  return "shell";
}

ToolCommand parse_command(std::string_view block) {
  ToolCommand cmd;
  cmd.raw = std::string(block);
  auto lines = split_lines(block);
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
  if (lines.empty()) throw FormatViolation(std::string(kFormatHelp));
  const auto head = words(lines[0]);
  if (head.empty()) throw FormatViolation(std::string(kFormatHelp));
  const std::string& verb = head[0];

  if (verb == "edit") {
    cmd.kind = CommandKind::Edit;
    const std::string shape = "edit <start_line>:<end_line>\n<replacement_text>\nend_of_edit";
    if (head.size() != 2) usage(shape);
    const auto colon = head[1].find(':');
    if (colon == std::string::npos) usage(shape);
    auto a = to_size(std::string_view(head[1]).substr(0, colon));
    auto b = to_size(std::string_view(head[1]).substr(colon + 1));
    if (!a || !b || *a < 1 || *a > *b) usage(shape);
    if (lines.size() < 2 || lines.back() != "end_of_edit") usage(shape);
    cmd.line_start = *a;
    cmd.line_end = *b;
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) cmd.text += lines[i] + "\n";
    return cmd;
  }
  if (lines.size() > 1)
    throw FormatViolation("Only one command may be entered at a time. Found " + std::to_string(lines.size()) +
                          " lines in the command block; submit the first command on its own.");

  if (verb == "open") {
    cmd.kind = CommandKind::Open;
    if (head.size() < 2 || head.size() > 3) usage("open <path> [<line_number>]");
    cmd.path = head[1];
    if (head.size() == 3) {
      auto n = to_size(head[2]);
      if (!n || *n < 1) usage("open <path> [<line_number>]");
      cmd.line = *n;
    }
  } else if (verb == "goto") {
    cmd.kind = CommandKind::Goto;
    auto n = head.size() == 2 ? to_size(head[1]) : std::nullopt;
    if (!n || *n < 1) usage("goto <line_number>");
    cmd.line = *n;
  } else if (verb == "scroll_down" || verb == "scroll_up") {
    cmd.kind = verb == "scroll_down" ? CommandKind::ScrollDown : CommandKind::ScrollUp;
    if (head.size() != 1) usage(verb);
  } else if (verb == "search_dir" || verb == "search_file" || verb == "find_file") {
    cmd.kind = CommandKind::Search;
    cmd.search_mode = verb;
    const std::string scope = verb == "search_file" ? "[<file>]" : "[<dir>]";
    if (head.size() < 2 || head.size() > 3) usage(verb + (verb == "find_file" ? " <file_name> " : " <search_term> ") + scope);
    cmd.text = head[1];
    if (head.size() == 3) cmd.path = head[2];
  } else if (verb == "create") {
    cmd.kind = CommandKind::Create;
    if (head.size() != 2) usage("create <filename>");
    cmd.path = head[1];
  } else if (verb == "submit") {
    cmd.kind = CommandKind::Submit;
    if (head.size() != 1) usage("submit");
  } else {
    cmd.kind = CommandKind::Shell;
  }
  return cmd;
}

Action parse_action(std::string_view text, std::size_t index) {
  Action action;
  action.index = index;
  action.response = std::string(text);

  // Fence positions as byte offsets of line starts.
  std::vector<std::pair<std::size_t, std::size_t>> fences;  // (line start, line end incl. newline)
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    std::string_view line = text.substr(pos, (nl == std::string_view::npos ? text.size() : nl) - pos);
    if (is_fence(line)) fences.emplace_back(pos, end);
    pos = end;
  }
  if (fences.size() != 2) {
    if (fences.size() > 2) throw FormatViolation(std::string(kFormatHelp) + "\n\nFound more than one command block.");
    throw FormatViolation(std::string(kFormatHelp));
  }
  action.discussion = std::string(text.substr(0, fences[0].first));
  std::string block(text.substr(fences[0].second, fences[1].first - fences[0].second));
  if (block.ends_with('\n')) block.pop_back();
  action.command = parse_command(block);
  return action;
}

}  // namespace refactorkit::harness
