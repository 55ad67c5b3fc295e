// Python 3 source -> syntax tree with a bounded node taxonomy.
//
// Only the constructs that structural assertions inspect get a first-class
// kind. Every other grammar construct becomes an `Other` node (its `label`
// holds the grammar construct name, e.g. "If" or "BinOp") whose children are
// preserved, so a walk still reaches anything nested inside it.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace refactorkit::pytree {

/// Grammar version the parser accepts.
inline constexpr std::string_view kGrammarVersion = "3.10";

enum class NodeKind {
  Module,
  ClassDef,
  FunctionDef,
  Assign,
  Attribute,
  Name,
  Call,
  KeywordArg,
  ImportFrom,
  Import,
  Constant,
  Parameter,
  Other,
};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view text);

/// 1-based inclusive line range.
struct Span {
  int line_start = 1;
  int line_end = 1;

  bool contains(const Span& other) const {
    return line_start <= other.line_start && other.line_end <= line_end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Annotation captured from anything other than a dotted name.
inline constexpr std::string_view kComplexAnnotation = "<complex>";

enum class ParamRole { PositionalOnly, Positional, VarPositional, KeywordOnly, VarKeyword };

struct ParamInfo {
  std::string name;
  /// Dotted name ("GunzipParams", "typing.Any") or kComplexAnnotation.
  std::optional<std::string> annotation;
  ParamRole role = ParamRole::Positional;
  bool has_default = false;

  friend bool operator==(const ParamInfo&, const ParamInfo&) = default;
};

struct FunctionAttrs {
  std::vector<ParamInfo> params;
  std::optional<std::string> returns;
  bool is_async = false;
  std::size_t decorator_count = 0;

  /// Parameters that may be passed positionally, in order.
  std::vector<ParamInfo> positional_params() const;
  friend bool operator==(const FunctionAttrs&, const FunctionAttrs&) = default;
};

struct ImportedName {
  /// Dotted for `import a.b`, plain identifier for `from m import x`.
  std::string name;
  std::optional<std::string> alias;
  friend bool operator==(const ImportedName&, const ImportedName&) = default;
};

struct ImportAttrs {
  /// Module path without leading dots; empty for `from . import x`.
  std::string module;
  int level = 0;
  std::vector<ImportedName> names;
  friend bool operator==(const ImportAttrs&, const ImportAttrs&) = default;
};

enum class ConstantType { None, Bool, Int, Float, Complex, Str, Bytes, Ellipsis };

struct ConstantAttrs {
  ConstantType type = ConstantType::None;
  /// Decoded value for Str/Bytes, "True"/"False" for Bool, the source
  /// literal (underscores removed) for numbers.
  std::string text;
  std::optional<std::int64_t> int_value;
  std::optional<double> float_value;
  friend bool operator==(const ConstantAttrs&, const ConstantAttrs&) = default;
};

struct CallAttrs {
  std::size_t positional_count = 0;
  std::size_t keyword_count = 0;
  friend bool operator==(const CallAttrs&, const CallAttrs&) = default;
};

struct ParameterAttrs {
  ParamInfo info;
  friend bool operator==(const ParameterAttrs&, const ParameterAttrs&) = default;
};

using NodeAttrs = std::variant<std::monostate, FunctionAttrs, ImportAttrs, ConstantAttrs,
                               CallAttrs, ParameterAttrs>;

struct SyntaxNode {
  NodeKind kind = NodeKind::Other;
  /// Grammar construct name; equals to_string(kind) for first-class kinds
  /// except KeywordArg ("keyword") and async functions ("AsyncFunctionDef").
  std::string label;
  std::optional<std::string> name;
  std::vector<SyntaxNode> children;
  Span span;
  NodeAttrs attrs;

  const FunctionAttrs* function() const { return std::get_if<FunctionAttrs>(&attrs); }
  const ImportAttrs* import() const { return std::get_if<ImportAttrs>(&attrs); }
  const ConstantAttrs* constant() const { return std::get_if<ConstantAttrs>(&attrs); }
  const ParameterAttrs* parameter() const { return std::get_if<ParameterAttrs>(&attrs); }

  // Call layout: children = [callee, positional args..., KeywordArg nodes...].
  const SyntaxNode* call_func() const;
  std::span<const SyntaxNode> call_args() const;
  std::span<const SyntaxNode> call_keywords() const;

  bool is(NodeKind k, std::string_view n) const { return kind == k && name && *name == n; }
};

struct SyntaxTree {
  std::string display_path;
  SyntaxNode root;
};

struct ParseFailure : std::runtime_error {
  ParseFailure(int line, int column, std::string message);

  int line;
  int column;
  std::string message;
};

/// Throws ParseFailure. Non-UTF-8 input fails at line 0.
SyntaxTree parse_source(std::string_view text, std::string display_path);

/// Preorder: every node appears before its descendants.
std::vector<const SyntaxNode*> walk(const SyntaxTree& tree);
std::vector<const SyntaxNode*> walk(const SyntaxNode& node);

std::vector<const SyntaxNode*> find_all(const SyntaxTree& tree, NodeKind kind,
                                        std::optional<std::string_view> name = std::nullopt);
std::vector<const SyntaxNode*> find_all(const SyntaxNode& subtree, NodeKind kind,
                                        std::optional<std::string_view> name = std::nullopt);

/// Dotted text of a Name/Attribute chain ("response.body"), nullopt otherwise.
std::optional<std::string> dotted_name(const SyntaxNode& node);

/// One line per node, indented by depth: "<label> [name] L<a>-<b>".
std::string dump_shape(const SyntaxNode& node);

}  // namespace refactorkit::pytree
