#include <algorithm>
#include <charconv>
#include <regex>
#include <sstream>

#include "refactorkit/evaluator.hpp"

namespace refactorkit::evaluator {

MalformedDiff::MalformedDiff(std::size_t at, std::string why)
    : std::runtime_error("malformed diff" + (at ? " at line " + std::to_string(at) : std::string()) + ": " + why),
      line(at),
      reason(std::move(why)) {}

ContextMismatch::ContextMismatch(std::string f, std::size_t h)
    : std::runtime_error("context mismatch in " + f + ", hunk " + std::to_string(h)), file(std::move(f)), hunk(h) {}

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// Lines without terminators; `final_newline` tells whether the text ended in '\n'.
struct Lines {
  std::vector<std::string> items;
  bool final_newline = true;
};

Lines to_lines(std::string_view text) {
  Lines out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.items.emplace_back(text.substr(pos));
      out.final_newline = false;
      break;
    }
    out.items.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

std::string from_lines(const Lines& l) {
  std::string out;
  for (std::size_t i = 0; i < l.items.size(); ++i) {
    out += l.items[i];
    if (i + 1 < l.items.size() || l.final_newline) out += '\n';
  }
  return out;
}

std::optional<std::string> header_path(const std::string& line, std::size_t lineno) {
  std::string rest = line.substr(4);
  if (auto tab = rest.find('\t'); tab != std::string::npos) rest.resize(tab);
  while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\r')) rest.pop_back();
  if (rest == "/dev/null") return std::nullopt;
  if (rest.empty()) throw MalformedDiff(lineno, "empty file name");
  if (starts_with(rest, "a/") || starts_with(rest, "b/")) rest = rest.substr(2);
  if (rest.front() == '/') throw MalformedDiff(lineno, "absolute path '" + rest + "'");
  std::stringstream parts(rest);
  for (std::string part; std::getline(parts, part, '/');) {
    if (part == "..") throw MalformedDiff(lineno, "path escapes the repository: '" + rest + "'");
  }
  return rest;
}

std::size_t to_count(const std::string& s, std::size_t lineno) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw MalformedDiff(lineno, "bad hunk range '" + s + "'");
  return v;
}

}  // namespace

Patch parse_patch(std::string_view text) {
  Patch patch;
  auto all = to_lines(text);
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
    return patch;
  const auto& lines = all.items;
  static const std::regex hunk_re(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$)");

  std::vector<std::string> pending;
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string& line = lines[i];
    if (!(starts_with(line, "--- ") && i + 1 < lines.size() && starts_with(lines[i + 1], "+++ "))) {
      if (starts_with(line, "@@")) throw MalformedDiff(i + 1, "hunk without file header");
      pending.push_back(line);
      ++i;
      continue;
    }
    FilePatch fp;
    fp.preamble = std::move(pending);
    pending.clear();
    fp.old_header = line;
    fp.new_header = lines[i + 1];
    fp.old_path = header_path(line, i + 1);
    fp.new_path = header_path(lines[i + 1], i + 2);
    if (!fp.old_path && !fp.new_path) throw MalformedDiff(i + 1, "both sides are /dev/null");
    i += 2;
    while (i < lines.size() && starts_with(lines[i], "@@")) {
      std::smatch m;
      if (!std::regex_match(lines[i], m, hunk_re)) throw MalformedDiff(i + 1, "bad hunk header");
      Hunk h;
      h.old_start = to_count(m[1], i + 1);
      h.old_count = m[2].matched ? to_count(m[2], i + 1) : 1;
      h.new_start = to_count(m[3], i + 1);
      h.new_count = m[4].matched ? to_count(m[4], i + 1) : 1;
      h.section = m[5];
      ++i;
      std::size_t old_seen = 0, new_seen = 0;
      while (i < lines.size() && (old_seen < h.old_count || new_seen < h.new_count)) {
        const std::string& body = lines[i];
        char tag = body.empty() ? ' ' : body[0];
        if (tag == ' ') {
          ++old_seen;
          ++new_seen;
        } else if (tag == '-') {
          ++old_seen;
        } else if (tag == '+') {
          ++new_seen;
        } else if (tag != '\\') {
          break;
        }
        h.lines.push_back(body);
        ++i;
      }
      if (old_seen != h.old_count || new_seen != h.new_count)
        throw MalformedDiff(i, "hunk body does not match its header counts");
      if (i < lines.size() && starts_with(lines[i], "\\")) h.lines.push_back(lines[i++]);
      fp.hunks.push_back(std::move(h));
    }
    if (fp.hunks.empty() && fp.old_path && fp.new_path)
      throw MalformedDiff(i, "file header without hunks");
    patch.files.push_back(std::move(fp));
  }
  if (patch.files.empty()) throw MalformedDiff(0, "no file headers found");
  patch.trailer = std::move(pending);
  return patch;
}

std::string serialize_patch(const Patch& patch) {
  std::string out;
  auto put = [&](const std::string& l) {
    out += l;
    out += '\n';
  };
  for (const auto& f : patch.files) {
    for (const auto& l : f.preamble) put(l);
    put(f.old_header);
    put(f.new_header);
    for (const auto& h : f.hunks) {
      put("@@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_count) + " +" +
          std::to_string(h.new_start) + "," + std::to_string(h.new_count) + " @@" + h.section);
      for (const auto& l : h.lines) put(l);
    }
  }
  for (const auto& l : patch.trailer) put(l);
  return out;
}

namespace {

struct HunkSides {
  std::vector<std::string> old_lines;
  std::vector<std::string> new_lines;
  bool old_noeol = false;
  bool new_noeol = false;
};

HunkSides sides_of(const Hunk& h) {
  HunkSides s;
  char last = ' ';
  for (const auto& l : h.lines) {
    char tag = l.empty() ? ' ' : l[0];
    std::string body = l.empty() ? std::string() : l.substr(1);
    if (tag == '\\') {
      if (last == '-') s.old_noeol = true;
      else if (last == '+') s.new_noeol = true;
      else s.old_noeol = s.new_noeol = true;
      continue;
    }
    if (tag != '+') s.old_lines.push_back(body);
    if (tag != '-') s.new_lines.push_back(body);
    last = tag;
  }
  return s;
}

bool matches_at(const std::vector<std::string>& file, std::size_t pos, const std::vector<std::string>& want) {
  if (pos + want.size() > file.size()) return false;
  return std::equal(want.begin(), want.end(), file.begin() + static_cast<std::ptrdiff_t>(pos));
}

std::string apply_file(const std::optional<std::string>& original, const FilePatch& fp) {
  Lines cur = original ? to_lines(*original) : Lines{};
  std::ptrdiff_t delta = 0;
  std::size_t floor = 0;
  for (std::size_t hi = 0; hi < fp.hunks.size(); ++hi) {
    const Hunk& h = fp.hunks[hi];
    HunkSides s = sides_of(h);
    std::ptrdiff_t nominal = static_cast<std::ptrdiff_t>(h.old_count == 0 ? h.old_start : h.old_start - 1) + delta;
    nominal = std::clamp<std::ptrdiff_t>(nominal, 0, static_cast<std::ptrdiff_t>(cur.items.size()));
    std::optional<std::size_t> found;
    const auto limit = static_cast<std::ptrdiff_t>(cur.items.size());
    for (std::ptrdiff_t off = 0; !found && off <= limit; ++off) {
      for (std::ptrdiff_t cand : {nominal - off, nominal + off}) {
        if (cand < static_cast<std::ptrdiff_t>(floor) || cand > limit) continue;
        if (matches_at(cur.items, static_cast<std::size_t>(cand), s.old_lines)) {
          found = static_cast<std::size_t>(cand);
          break;
        }
      }
    }
    if (!found) throw ContextMismatch(fp.path(), hi + 1);
    std::size_t at = *found;
    bool touches_end = at + s.old_lines.size() == cur.items.size();
    if (s.old_noeol && (!touches_end || cur.final_newline)) throw ContextMismatch(fp.path(), hi + 1);
    cur.items.erase(cur.items.begin() + static_cast<std::ptrdiff_t>(at),
                    cur.items.begin() + static_cast<std::ptrdiff_t>(at + s.old_lines.size()));
    cur.items.insert(cur.items.begin() + static_cast<std::ptrdiff_t>(at), s.new_lines.begin(), s.new_lines.end());
    if (touches_end) cur.final_newline = !s.new_noeol;
    floor = at + s.new_lines.size();
    delta += static_cast<std::ptrdiff_t>(s.new_lines.size()) - static_cast<std::ptrdiff_t>(s.old_lines.size());
  }
  if (cur.items.empty()) cur.final_newline = true;
  return from_lines(cur);
}

}  // namespace

std::set<std::string> apply_patch(FileMap& files, const Patch& patch) {
  FileMap staged = files;
  std::set<std::string> touched;
  for (const auto& fp : patch.files) {
    const std::string& path = fp.path();
    auto it = staged.find(path);
    if (!fp.old_path) {
      if (it != staged.end()) throw ContextMismatch(path, 1);
      staged[path] = apply_file(std::nullopt, fp);
    } else {
      if (it == staged.end()) throw ContextMismatch(path, 1);
      std::string next = apply_file(it->second, fp);
      if (!fp.new_path) {
        if (!next.empty()) throw ContextMismatch(path, fp.hunks.size());
        staged.erase(it);
      } else {
        it->second = std::move(next);
      }
    }
    touched.insert(path);
  }
  files = std::move(staged);
  return touched;
}

namespace {

enum class Op { Keep, Del, Add };

// LCS edit script; fixture files are small enough for the quadratic table.
std::vector<std::pair<Op, std::size_t>> edit_script(const std::vector<std::string>& a,
                                                    const std::vector<std::string>& b) {
  std::size_t pre = 0;
  while (pre < a.size() && pre < b.size() && a[pre] == b[pre]) ++pre;
  std::size_t suf = 0;
  while (suf < a.size() - pre && suf < b.size() - pre && a[a.size() - 1 - suf] == b[b.size() - 1 - suf]) ++suf;
  const std::size_t n = a.size() - pre - suf, m = b.size() - pre - suf;
  std::vector<std::vector<std::uint32_t>> t(n + 1, std::vector<std::uint32_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      t[i][j] = a[pre + i] == b[pre + j] ? t[i + 1][j + 1] + 1 : std::max(t[i + 1][j], t[i][j + 1]);
  std::vector<std::pair<Op, std::size_t>> ops;
  for (std::size_t k = 0; k < pre; ++k) ops.emplace_back(Op::Keep, k);
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[pre + i] == b[pre + j]) {
      ops.emplace_back(Op::Keep, pre + i);
      ++i, ++j;
    } else if (i < n && (j == m || t[i + 1][j] >= t[i][j + 1])) {
      ops.emplace_back(Op::Del, pre + i++);
    } else {
      ops.emplace_back(Op::Add, pre + j++);
    }
  }
  for (std::size_t k = 0; k < suf; ++k) ops.emplace_back(Op::Keep, a.size() - suf + k);
  return ops;
}

void diff_file(std::string& out, const std::string& path, const std::optional<std::string>& before,
               const std::optional<std::string>& after) {
  Lines a = before ? to_lines(*before) : Lines{};
  Lines b = after ? to_lines(*after) : Lines{};
  // A missing final newline changes the last line's identity for matching purposes.
  std::vector<std::string> ka = a.items, kb = b.items;
  if (!a.final_newline && !ka.empty()) ka.back() += '\0';
  if (!b.final_newline && !kb.empty()) kb.back() += '\0';
  auto ops = edit_script(ka, kb);

  struct Row {
    Op op;
    std::size_t ai, bi;  // positions in a/b before this row
  };
  std::vector<Row> rows;
  std::size_t ai = 0, bi = 0;
  for (auto [op, idx] : ops) {
    rows.push_back({op, ai, bi});
    if (op != Op::Add) ++ai;
    if (op != Op::Del) ++bi;
  }
  out += "--- " + (before ? "a/" + path : std::string("/dev/null")) + "\n";
  out += "+++ " + (after ? "b/" + path : std::string("/dev/null")) + "\n";
  constexpr std::size_t ctx = 3;
  std::size_t r = 0;
  while (r < rows.size()) {
    if (rows[r].op == Op::Keep) {
      ++r;
      continue;
    }
    std::size_t start = r >= ctx ? r - ctx : 0;
    std::size_t end = r;
    std::size_t last_change = r;
    while (end < rows.size()) {
      if (rows[end].op != Op::Keep) last_change = end;
      else if (end - last_change > 2 * ctx) break;
      ++end;
    }
    end = std::min(rows.size(), last_change + ctx + 1);
    std::size_t oc = 0, nc = 0;
    std::string body;
    for (std::size_t k = start; k < end; ++k) {
      const Row& row = rows[k];
      const bool old_side = row.op != Op::Add, new_side = row.op != Op::Del;
      const std::string& text = row.op == Op::Add ? b.items[row.bi] : a.items[row.ai];
      body += (row.op == Op::Keep ? ' ' : row.op == Op::Del ? '-' : '+') + text + "\n";
      bool noeol = (old_side && row.ai + 1 == a.items.size() && !a.final_newline) ||
                   (new_side && row.bi + 1 == b.items.size() && !b.final_newline);
      if (noeol) body += "\\ No newline at end of file\n";
      oc += old_side;
      nc += new_side;
    }
    std::size_t os = oc ? rows[start].ai + 1 : rows[start].ai;
    std::size_t ns = nc ? rows[start].bi + 1 : rows[start].bi;
    out += "@@ -" + std::to_string(os) + "," + std::to_string(oc) + " +" + std::to_string(ns) + "," +
           std::to_string(nc) + " @@\n" + body;
    r = end;
  }
}

}  // namespace

std::string make_patch(const FileMap& before, const FileMap& after) {
  std::set<std::string> paths;
  for (const auto& [p, _] : before) paths.insert(p);
  for (const auto& [p, _] : after) paths.insert(p);
  std::string out;
  for (const auto& p : paths) {
    auto x = before.find(p);
    auto y = after.find(p);
    std::optional<std::string> a = x == before.end() ? std::nullopt : std::optional(x->second);
    std::optional<std::string> b = y == after.end() ? std::nullopt : std::optional(y->second);
    if (a == b) continue;
    out += "diff -ruN a/" + p + " b/" + p + "\n";
    diff_file(out, p, a, b);
  }
  return out;
}

FileMap to_file_map(const std::vector<FileEntry>& files) {
  FileMap m;
  for (const auto& f : files) m[f.path] = f.content;
  return m;
}

std::vector<FileEntry> to_entries(const FileMap& files) {
  std::vector<FileEntry> out;
  for (const auto& [p, c] : files) out.push_back({p, c});
  return out;
}

}  // namespace refactorkit::evaluator
