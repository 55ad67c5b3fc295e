#include <algorithm>
#include <array>
#include <sstream>

#include "refactorkit/pytree.hpp"
#include "tokenizer.hpp"

namespace refactorkit::pytree {

namespace detail {
SyntaxNode parse_tokens(std::vector<Token> tokens, int line_count);
}

namespace {

constexpr std::array<std::string_view, 13> kKindNames = {
    "Module", "ClassDef", "FunctionDef", "Assign",   "Attribute", "Name",  "Call",
    "KeywordArg", "ImportFrom", "Import", "Constant", "Parameter", "Other",
};

// Returns the byte offset of the first invalid sequence, or npos.
std::size_t find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::string_view::npos;
}

int count_lines(std::string_view text) {
  if (text.empty()) return 1;
  int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  if (text.back() != '\n') ++lines;
  return std::max(lines, 1);
}

void dump(const SyntaxNode& node, int depth, std::ostringstream& out) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << node.label;
  if (node.name) out << ' ' << *node.name;
  out << " L" << node.span.line_start << '-' << node.span.line_end << '\n';
  for (const auto& child : node.children) dump(child, depth + 1, out);
}

}  // namespace

std::string_view to_string(NodeKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<NodeKind> node_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::vector<ParamInfo> FunctionAttrs::positional_params() const {
  std::vector<ParamInfo> out;
  for (const auto& p : params) {
    if (p.role == ParamRole::PositionalOnly || p.role == ParamRole::Positional) out.push_back(p);
  }
  return out;
}

const SyntaxNode* SyntaxNode::call_func() const {
  if (kind != NodeKind::Call || children.empty()) return nullptr;
  return &children.front();
}

std::span<const SyntaxNode> SyntaxNode::call_args() const {
  const auto* call = std::get_if<CallAttrs>(&attrs);
  if (kind != NodeKind::Call || call == nullptr) return {};
  return std::span<const SyntaxNode>(children).subspan(1, call->positional_count);
}

std::span<const SyntaxNode> SyntaxNode::call_keywords() const {
  const auto* call = std::get_if<CallAttrs>(&attrs);
  if (kind != NodeKind::Call || call == nullptr) return {};
  return std::span<const SyntaxNode>(children).subspan(1 + call->positional_count, call->keyword_count);
}

ParseFailure::ParseFailure(int line_no, int column_no, std::string msg)
    : std::runtime_error("line " + std::to_string(line_no) + ", column " + std::to_string(column_no) +
                         ": " + msg),
      line(line_no),
      column(column_no),
      message(std::move(msg)) {}

SyntaxTree parse_source(std::string_view text, std::string display_path) {
  if (const auto bad = find_invalid_utf8(text); bad != std::string_view::npos) {
    throw ParseFailure(0, 0, "source is not valid UTF-8 (byte offset " + std::to_string(bad) + ")");
  }
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  SyntaxTree tree;
  tree.display_path = std::move(display_path);
  tree.root = detail::parse_tokens(detail::tokenize(text), count_lines(text));
  return tree;
}

std::vector<const SyntaxNode*> walk(const SyntaxNode& node) {
  std::vector<const SyntaxNode*> out;
  std::vector<const SyntaxNode*> stack{&node};
  while (!stack.empty()) {
    const SyntaxNode* n = stack.back();
    stack.pop_back();
    out.push_back(n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
  return out;
}

std::vector<const SyntaxNode*> walk(const SyntaxTree& tree) { return walk(tree.root); }

std::vector<const SyntaxNode*> find_all(const SyntaxNode& subtree, NodeKind kind,
                                        std::optional<std::string_view> name) {
  std::vector<const SyntaxNode*> out;
  for (const SyntaxNode* n : walk(subtree)) {
    if (n->kind != kind) continue;
    if (name && (!n->name || *n->name != *name)) continue;
    out.push_back(n);
  }
  return out;
}

std::vector<const SyntaxNode*> find_all(const SyntaxTree& tree, NodeKind kind,
                                        std::optional<std::string_view> name) {
  return find_all(tree.root, kind, name);
}

std::optional<std::string> dotted_name(const SyntaxNode& node) {
  if (node.kind == NodeKind::Name && node.name) return *node.name;
  if (node.kind == NodeKind::Attribute && node.name && node.children.size() == 1) {
    if (auto base = dotted_name(node.children.front())) return *base + "." + *node.name;
  }
  return std::nullopt;
}

std::string dump_shape(const SyntaxNode& node) {
  std::ostringstream out;
  dump(node, 0, out);
  return out.str();
}

}  // namespace refactorkit::pytree
