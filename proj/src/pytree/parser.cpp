// Recursive-descent parser for the Python 3.10 grammar.
//
// Node shapes follow the `ast` module closely (Assign targets, Call
// args/keywords, BoolOp flattening) so assertion predicates written against
// `ast` semantics transfer unchanged. Children appear in source order, with
// one exception inherited from `ast`: a Call lists positional arguments
// before keyword arguments.
#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <set>
#include <utility>

#include "refactorkit/pytree.hpp"
#include "strings.hpp"
#include "tokenizer.hpp"

namespace refactorkit::pytree {
namespace detail {
namespace {

SyntaxNode make_node(NodeKind kind, std::string label, int line_start, int line_end) {
  SyntaxNode node;
  node.kind = kind;
  node.label = std::move(label);
  node.span = Span{line_start, line_end};
  return node;
}

SyntaxNode make_node(NodeKind kind, int line_start, int line_end) {
  return make_node(kind, std::string(to_string(kind)), line_start, line_end);
}

SyntaxNode make_other(std::string label, int line_start, int line_end) {
  return make_node(NodeKind::Other, std::move(label), line_start, line_end);
}

std::string annotation_text(const SyntaxNode& node) {
  if (auto dotted = dotted_name(node)) return *dotted;
  return std::string(kComplexAnnotation);
}

bool is_compare_op(const Token& tok) {
  if (tok.type == TokenType::Op) {
    return tok.text == "<" || tok.text == ">" || tok.text == "==" || tok.text == ">=" ||
           tok.text == "<=" || tok.text == "!=";
  }
  return tok.type == TokenType::Name && (tok.text == "in" || tok.text == "is" || tok.text == "not");
}

bool is_augassign(const Token& tok) {
  static const std::set<std::string, std::less<>> ops = {
      "+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**="};
  return tok.type == TokenType::Op && ops.contains(tok.text);
}

enum class TargetContext { Assign, AugAssign, Delete, Annotated };

class Parser {
 public:
  Parser(std::vector<Token> tokens, int line_count)
      : toks_(std::move(tokens)), line_count_(line_count) {}

  SyntaxNode parse_module() {
    SyntaxNode module = make_node(NodeKind::Module, 1, std::max(1, line_count_));
    while (peek().type != TokenType::EndMarker) {
      statement(module.children);
    }
    for (const auto& child : module.children) {
      module.span.line_end = std::max(module.span.line_end, child.span.line_end);
    }
    return module;
  }

  // Parses a standalone expression (f-string replacement fields).
  SyntaxNode parse_fstring_expression() {
    SyntaxNode expr = yield_or_star_expressions();
    if (peek().type == TokenType::Newline) take();
    if (peek().type != TokenType::EndMarker) fail_here("f-string: invalid syntax");
    return expr;
  }

 private:
  // ---- token helpers -------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  Token take() {
    Token tok = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    if (tok.type != TokenType::Newline && tok.type != TokenType::Indent &&
        tok.type != TokenType::Dedent && tok.type != TokenType::EndMarker) {
      prev_end_ = tok.end_line;
    }
    return tok;
  }
  bool at_op(std::string_view op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == TokenType::Op && t.text == op;
  }
  bool at_keyword(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == TokenType::Name && t.text == kw;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    take();
    return true;
  }
  bool accept_keyword(std::string_view kw) {
    if (!at_keyword(kw)) return false;
    take();
    return true;
  }
  Token expect_op(std::string_view op) {
    if (!at_op(op)) fail_here("expected '" + std::string(op) + "'");
    return take();
  }
  Token expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail_here("expected '" + std::string(kw) + "'");
    return take();
  }
  bool at_identifier(std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == TokenType::Name && !is_keyword(t.text);
  }
  Token expect_identifier() {
    if (!at_identifier()) fail_here("invalid syntax");
    return take();
  }
  void expect_newline() {
    if (peek().type != TokenType::Newline) fail_here("invalid syntax");
    take();
  }

  [[noreturn]] void fail_here(const std::string& message) const {
    const Token& t = peek();
    std::string msg = message;
    if (t.type == TokenType::Indent) msg = "unexpected indent";
    if (t.type == TokenType::EndMarker && message == "invalid syntax") msg = "unexpected EOF while parsing";
    throw ParseFailure(t.line, t.column, msg);
  }
  [[noreturn]] static void fail_node(const SyntaxNode& node, const std::string& message) {
    throw ParseFailure(node.span.line_start, 1, message);
  }

  // ---- statements ----------------------------------------------------

  void statement(std::vector<SyntaxNode>& out) {
    const Token& t = peek();
    if (t.type == TokenType::Indent) fail_here("unexpected indent");
    if (t.type == TokenType::Dedent) fail_here("unindent does not match any outer indentation level");
    if (t.type == TokenType::Name) {
      if (t.text == "def") return out.push_back(function_def({}, false, t.line));
      if (t.text == "class") return out.push_back(class_def({}, t.line));
      if (t.text == "if") return out.push_back(if_stmt());
      if (t.text == "while") return out.push_back(while_stmt());
      if (t.text == "for") return out.push_back(for_stmt(false, t.line));
      if (t.text == "try") return out.push_back(try_stmt());
      if (t.text == "with") return out.push_back(with_stmt(false, t.line));
      if (t.text == "async") return out.push_back(async_stmt({}));
      if (t.text == "match") {
        if (auto m = try_match_stmt()) return out.push_back(std::move(*m));
      }
    }
    if (at_op("@")) return out.push_back(decorated());
    simple_statements(out);
  }

  void simple_statements(std::vector<SyntaxNode>& out) {
    out.push_back(simple_statement());
    while (accept_op(";")) {
      if (peek().type == TokenType::Newline) break;
      out.push_back(simple_statement());
    }
    expect_newline();
  }

  std::vector<SyntaxNode> block() {
    std::vector<SyntaxNode> body;
    if (peek().type == TokenType::Newline) {
      take();
      if (peek().type != TokenType::Indent) fail_here("expected an indented block");
      take();
      while (peek().type != TokenType::Dedent && peek().type != TokenType::EndMarker) {
        statement(body);
      }
      if (peek().type == TokenType::Dedent) take();
    } else {
      simple_statements(body);
    }
    return body;
  }

  static void append(SyntaxNode& parent, std::vector<SyntaxNode> nodes) {
    for (auto& n : nodes) parent.children.push_back(std::move(n));
  }

  // A node spans every token its rule consumed, brackets included.
  bool last_call_bare_generator_ = false;

  void finish(SyntaxNode& node) const { node.span.line_end = std::max(node.span.line_end, prev_end_); }

  SyntaxNode decorated() {
    const int start = peek().line;
    std::vector<SyntaxNode> decorators;
    while (accept_op("@")) {
      decorators.push_back(named_expression());
      expect_newline();
    }
    if (at_keyword("def")) return function_def(std::move(decorators), false, start);
    if (at_keyword("class")) return class_def(std::move(decorators), start);
    if (at_keyword("async")) return async_stmt(std::move(decorators), start);
    fail_here("invalid syntax");
  }

  SyntaxNode async_stmt(std::vector<SyntaxNode> decorators, int start = 0) {
    const Token kw = expect_keyword("async");
    if (start == 0) start = kw.line;
    if (at_keyword("def")) return function_def(std::move(decorators), true, start);
    if (!decorators.empty()) fail_here("invalid syntax");
    if (at_keyword("for")) return for_stmt(true, start);
    if (at_keyword("with")) return with_stmt(true, start);
    fail_here("invalid syntax");
  }

  SyntaxNode function_def(std::vector<SyntaxNode> decorators, bool is_async, int start) {
    expect_keyword("def");
    const Token name = expect_identifier();
    SyntaxNode fn = make_node(NodeKind::FunctionDef, start, name.line);
    if (is_async) fn.label = "AsyncFunctionDef";
    fn.name = name.text;
    FunctionAttrs attrs;
    attrs.is_async = is_async;
    attrs.decorator_count = decorators.size();
    append(fn, std::move(decorators));

    expect_op("(");
    std::vector<SyntaxNode> params = parameters(")", true);
    expect_op(")");
    for (const auto& p : params) attrs.params.push_back(p.parameter()->info);
    append(fn, std::move(params));

    if (accept_op("->")) {
      SyntaxNode ret = expression();
      attrs.returns = annotation_text(ret);
      fn.children.push_back(std::move(ret));
    }
    expect_op(":");
    append(fn, block());
    fn.attrs = std::move(attrs);
    finish(fn);
    return fn;
  }

  // Shared by `def` (annotations allowed) and `lambda`.
  std::vector<SyntaxNode> parameters(std::string_view terminator, bool annotations) {
    std::vector<SyntaxNode> params;
    bool seen_default = false;
    bool seen_slash = false;
    bool keyword_only = false;
    bool bare_star_pending = false;
    bool seen_double_star = false;

    auto one_param = [&](ParamRole role, bool allow_default) {
      const Token name = expect_identifier();
      SyntaxNode param = make_node(NodeKind::Parameter, name.line, name.end_line);
      param.name = name.text;
      ParamInfo info{name.text, std::nullopt, role, false};
      if (annotations && accept_op(":")) {
        SyntaxNode ann = role == ParamRole::VarPositional ? star_expression() : expression();
        info.annotation = annotation_text(ann);
        param.children.push_back(std::move(ann));
      }
      if (allow_default && accept_op("=")) {
        param.children.push_back(expression());
        info.has_default = true;
      }
      param.attrs = ParameterAttrs{info};
      finish(param);
      return param;
    };

    while (!at_op(terminator)) {
      if (seen_double_star) fail_here("arguments cannot follow var-keyword argument");
      if (accept_op("/")) {
        if (seen_slash) fail_here("/ may appear only once");
        if (keyword_only) fail_here("/ must be ahead of *");
        if (params.empty()) fail_here("at least one argument must precede /");
        seen_slash = true;
        for (auto& p : params) {
          std::get<ParameterAttrs>(p.attrs).info.role = ParamRole::PositionalOnly;
        }
      } else if (accept_op("**")) {
        if (bare_star_pending) fail_here("named arguments must follow bare *");
        params.push_back(one_param(ParamRole::VarKeyword, false));
        seen_double_star = true;
      } else if (accept_op("*")) {
        if (keyword_only) fail_here("* argument may appear only once");
        keyword_only = true;
        if (at_op(",") || at_op(terminator)) {
          bare_star_pending = true;
        } else {
          params.push_back(one_param(ParamRole::VarPositional, false));
        }
      } else {
        const ParamRole role = keyword_only ? ParamRole::KeywordOnly : ParamRole::Positional;
        SyntaxNode p = one_param(role, true);
        const bool has_default = p.parameter()->info.has_default;
        if (!keyword_only) {
          if (has_default) {
            seen_default = true;
          } else if (seen_default) {
            fail_node(p, "non-default argument follows default argument");
          }
        }
        bare_star_pending = false;
        params.push_back(std::move(p));
      }
      if (!accept_op(",")) break;
    }
    if (bare_star_pending) fail_here("named arguments must follow bare *");
    return params;
  }

  SyntaxNode class_def(std::vector<SyntaxNode> decorators, int start) {
    expect_keyword("class");
    const Token name = expect_identifier();
    SyntaxNode cls = make_node(NodeKind::ClassDef, start, name.line);
    cls.name = name.text;
    append(cls, std::move(decorators));
    if (accept_op("(")) {
      auto [args, keywords] = call_arguments();
      expect_op(")");
      append(cls, std::move(args));
      append(cls, std::move(keywords));
    }
    expect_op(":");
    append(cls, block());
    finish(cls);
    return cls;
  }

  SyntaxNode if_stmt() {
    const Token kw = take();  // `if` or `elif`
    SyntaxNode node = make_other("If", kw.line, kw.line);
    node.children.push_back(named_expression());
    expect_op(":");
    append(node, block());
    if (at_keyword("elif")) {
      node.children.push_back(if_stmt());
    } else if (accept_keyword("else")) {
      expect_op(":");
      append(node, block());
    }
    finish(node);
    return node;
  }

  SyntaxNode while_stmt() {
    const Token kw = expect_keyword("while");
    SyntaxNode node = make_other("While", kw.line, kw.line);
    node.children.push_back(named_expression());
    expect_op(":");
    append(node, block());
    else_block(node);
    finish(node);
    return node;
  }

  void else_block(SyntaxNode& node) {
    if (accept_keyword("else")) {
      expect_op(":");
      append(node, block());
    }
  }

  SyntaxNode for_stmt(bool is_async, int start) {
    expect_keyword("for");
    SyntaxNode node = make_other(is_async ? "AsyncFor" : "For", start, start);
    SyntaxNode target = star_targets();
    validate_target(target, TargetContext::Assign);
    node.children.push_back(std::move(target));
    expect_keyword("in");
    node.children.push_back(star_expressions());
    expect_op(":");
    append(node, block());
    else_block(node);
    finish(node);
    return node;
  }

  SyntaxNode try_stmt() {
    const Token kw = expect_keyword("try");
    SyntaxNode node = make_other("Try", kw.line, kw.line);
    expect_op(":");
    append(node, block());
    bool handled = false;
    while (at_keyword("except")) {
      const Token ex = take();
      handled = true;
      SyntaxNode handler = make_other("ExceptHandler", ex.line, ex.line);
      if (!at_op(":")) {
        SyntaxNode type = expression();
        if (at_op(",")) fail_here("multiple exception types must be parenthesized");
        handler.children.push_back(std::move(type));
        if (accept_keyword("as")) expect_identifier();
      }
      expect_op(":");
      append(handler, block());
      finish(handler);
      node.children.push_back(std::move(handler));
    }
    if (handled) else_block(node);
    if (accept_keyword("finally")) {
      expect_op(":");
      append(node, block());
      handled = true;
    }
    if (!handled) fail_here("expected 'except' or 'finally' block");
    finish(node);
    return node;
  }

  SyntaxNode with_item() {
    const int start = peek().line;
    SyntaxNode ctx = expression();
    SyntaxNode item = make_other("withitem", start, start);
    item.children.push_back(std::move(ctx));
    if (accept_keyword("as")) {
      SyntaxNode target = star_target();
      validate_target(target, TargetContext::Assign);
      item.children.push_back(std::move(target));
    }
    finish(item);
    return item;
  }

  SyntaxNode with_stmt(bool is_async, int start) {
    expect_keyword("with");
    SyntaxNode node = make_other(is_async ? "AsyncWith" : "With", start, start);
    bool parsed = false;
    if (at_op("(")) {
      // `with (a as b, c):` -- fall back to a plain item list on mismatch.
      const std::size_t saved = pos_;
      const int saved_end = prev_end_;
      try {
        take();
        std::vector<SyntaxNode> items;
        items.push_back(with_item());
        while (accept_op(",")) {
          if (at_op(")")) break;
          items.push_back(with_item());
        }
        expect_op(")");
        if (!at_op(":")) throw ParseFailure(0, 0, "");
        append(node, std::move(items));
        parsed = true;
      } catch (const ParseFailure&) {
        pos_ = saved;
        prev_end_ = saved_end;
      }
    }
    if (!parsed) {
      node.children.push_back(with_item());
      while (accept_op(",")) node.children.push_back(with_item());
    }
    expect_op(":");
    append(node, block());
    finish(node);
    return node;
  }

  SyntaxNode simple_statement() {
    const Token& t = peek();
    if (t.type == TokenType::Name) {
      if (t.text == "pass" || t.text == "break" || t.text == "continue") {
        const Token kw = take();
        std::string label = kw.text;
        label[0] = static_cast<char>(std::toupper(label[0]));
        return make_other(label, kw.line, kw.line);
      }
      if (t.text == "return") {
        const Token kw = take();
        SyntaxNode node = make_other("Return", kw.line, kw.line);
        if (!at_statement_end()) node.children.push_back(star_expressions());
        finish(node);
        return node;
      }
      if (t.text == "raise") {
        const Token kw = take();
        SyntaxNode node = make_other("Raise", kw.line, kw.line);
        if (!at_statement_end()) {
          node.children.push_back(expression());
          if (accept_keyword("from")) node.children.push_back(expression());
        }
        finish(node);
        return node;
      }
      if (t.text == "global" || t.text == "nonlocal") {
        const Token kw = take();
        SyntaxNode node = make_other(kw.text == "global" ? "Global" : "Nonlocal", kw.line, kw.line);
        expect_identifier();
        while (accept_op(",")) expect_identifier();
        node.span.line_end = prev_end_;
        return node;
      }
      if (t.text == "del") {
        const Token kw = take();
        SyntaxNode node = make_other("Delete", kw.line, kw.line);
        do {
          if (at_statement_end()) break;
          SyntaxNode target = bitwise_or();
          validate_target(target, TargetContext::Delete);
          node.children.push_back(std::move(target));
        } while (accept_op(","));
        if (node.children.empty()) fail_here("invalid syntax");
        finish(node);
        return node;
      }
      if (t.text == "assert") {
        const Token kw = take();
        SyntaxNode node = make_other("Assert", kw.line, kw.line);
        node.children.push_back(expression());
        if (accept_op(",")) node.children.push_back(expression());
        finish(node);
        return node;
      }
      if (t.text == "import") return import_stmt();
      if (t.text == "from") return import_from();
    }
    return expression_statement();
  }

  bool at_statement_end() const {
    return peek().type == TokenType::Newline || at_op(";") || peek().type == TokenType::EndMarker;
  }

  std::string dotted_identifier() {
    std::string name = expect_identifier().text;
    while (at_op(".") && at_identifier(1)) {
      take();
      name += "." + take().text;
    }
    return name;
  }

  SyntaxNode import_stmt() {
    const Token kw = expect_keyword("import");
    SyntaxNode node = make_node(NodeKind::Import, kw.line, kw.line);
    ImportAttrs attrs;
    do {
      ImportedName entry{dotted_identifier(), std::nullopt};
      if (accept_keyword("as")) entry.alias = expect_identifier().text;
      attrs.names.push_back(std::move(entry));
    } while (accept_op(","));
    node.span.line_end = prev_end_;
    node.attrs = std::move(attrs);
    return node;
  }

  SyntaxNode import_from() {
    const Token kw = expect_keyword("from");
    SyntaxNode node = make_node(NodeKind::ImportFrom, kw.line, kw.line);
    ImportAttrs attrs;
    while (at_op(".") || at_op("...")) attrs.level += static_cast<int>(take().text.size());
    if (!at_keyword("import")) attrs.module = dotted_identifier();
    expect_keyword("import");
    if (accept_op("*")) {
      attrs.names.push_back({"*", std::nullopt});
    } else {
      const bool parenthesized = accept_op("(");
      do {
        if (parenthesized && at_op(")")) break;
        ImportedName entry{expect_identifier().text, std::nullopt};
        if (accept_keyword("as")) entry.alias = expect_identifier().text;
        attrs.names.push_back(std::move(entry));
      } while (accept_op(","));
      if (parenthesized) {
        expect_op(")");
      } else if (!attrs.names.empty() && peek(0).type != TokenType::Newline && at_op(",")) {
        fail_here("trailing comma not allowed without surrounding parentheses");
      }
      if (attrs.names.empty()) fail_here("invalid syntax");
    }
    node.span.line_end = prev_end_;
    node.attrs = std::move(attrs);
    return node;
  }

  SyntaxNode assignment_value() {
    if (at_keyword("yield")) return yield_expression();
    return star_expressions();
  }

  SyntaxNode expression_statement() {
    const int start = peek().line;
    SyntaxNode first = at_keyword("yield") ? yield_expression() : star_expressions();

    if (accept_op(":")) {
      validate_target(first, TargetContext::Annotated);
      SyntaxNode node = make_other("AnnAssign", start, start);
      node.children.push_back(std::move(first));
      node.children.push_back(expression());
      if (accept_op("=")) node.children.push_back(assignment_value());
      finish(node);
      return node;
    }
    if (is_augassign(peek())) {
      take();
      validate_target(first, TargetContext::AugAssign);
      SyntaxNode node = make_other("AugAssign", start, start);
      node.children.push_back(std::move(first));
      node.children.push_back(assignment_value());
      finish(node);
      return node;
    }
    if (at_op("=")) {
      SyntaxNode node = make_node(NodeKind::Assign, start, start);
      std::vector<SyntaxNode> chain;
      chain.push_back(std::move(first));
      while (accept_op("=")) chain.push_back(assignment_value());
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        validate_target(chain[i], TargetContext::Assign);
      }
      append(node, std::move(chain));
      finish(node);
      return node;
    }
    SyntaxNode node = make_other("Expr", start, start);
    node.children.push_back(std::move(first));
    finish(node);
    return node;
  }

  static std::string describe(const SyntaxNode& node) {
    const std::string& l = node.label;
    if (l == "Call") return "function call";
    if (l == "Constant") {
      const auto* c = node.constant();
      if (c && c->type == ConstantType::None) return "None";
      if (c && c->type == ConstantType::Bool) return c->text;
      if (c && c->type == ConstantType::Ellipsis) return "ellipsis";
      return "literal";
    }
    if (l == "BinOp" || l == "UnaryOp") return "expression";
    if (l == "BoolOp") return "expression";
    if (l == "Compare") return "comparison";
    if (l == "Lambda") return "lambda";
    if (l == "IfExp") return "conditional expression";
    if (l == "NamedExpr") return "named expression";
    if (l == "JoinedStr") return "f-string expression";
    if (l == "Dict") return "dict literal";
    if (l == "Set") return "set display";
    if (l == "ListComp") return "list comprehension";
    if (l == "SetComp") return "set comprehension";
    if (l == "DictComp") return "dict comprehension";
    if (l == "GeneratorExp") return "generator expression";
    if (l == "Await") return "await expression";
    if (l == "Yield" || l == "YieldFrom") return "yield expression";
    return "expression";
  }

  void validate_target(const SyntaxNode& node, TargetContext ctx, bool nested = false) const {
    const std::string& l = node.label;
    const char* verb = ctx == TargetContext::Delete ? "cannot delete " : "cannot assign to ";
    if (l == "Name" || l == "Attribute" || l == "Subscript") return;
    if (ctx == TargetContext::AugAssign) {
      fail_node(node, "'" + describe(node) + "' is an illegal expression for augmented assignment");
    }
    if (ctx == TargetContext::Annotated) {
      if (l == "Tuple") fail_node(node, "only single target (not tuple) can be annotated");
      if (l == "List") fail_node(node, "only single target (not list) can be annotated");
      fail_node(node, "illegal target for annotation");
    }
    if (l == "Tuple" || l == "List") {
      for (const auto& child : node.children) validate_target(child, ctx, true);
      return;
    }
    if (l == "Starred" && ctx != TargetContext::Delete) {
      if (!nested) fail_node(node, "starred assignment target must be in a list or tuple");
      validate_target(node.children.front(), ctx, true);
      return;
    }
    fail_node(node, verb + describe(node));
  }

  // ---- match statement -----------------------------------------------

  std::optional<SyntaxNode> try_match_stmt() {
    const std::size_t saved = pos_;
    const int saved_end = prev_end_;
    SyntaxNode node;
    try {
      const Token kw = take();
      node = make_other("Match", kw.line, kw.line);
      const int subject_start = peek().line;
      SyntaxNode subject = star_named_expression();
      if (at_op(",")) {
        SyntaxNode tuple = make_other("Tuple", subject_start, subject_start);
        tuple.children.push_back(std::move(subject));
        while (accept_op(",")) {
          if (at_op(":")) break;
          tuple.children.push_back(star_named_expression());
        }
        finish(tuple);
        subject = std::move(tuple);
      }
      node.children.push_back(std::move(subject));
      expect_op(":");
      expect_newline();
      if (peek().type != TokenType::Indent || !at_keyword("case", 1)) {
        throw ParseFailure(0, 0, "");
      }
    } catch (const ParseFailure&) {
      pos_ = saved;
      prev_end_ = saved_end;
      return std::nullopt;
    }
    take();  // INDENT
    while (at_keyword("case")) {
      const Token kw = take();
      SyntaxNode arm = make_other("match_case", kw.line, kw.line);
      arm.children.push_back(patterns());
      if (accept_keyword("if")) arm.children.push_back(named_expression());
      expect_op(":");
      append(arm, block());
      finish(arm);
      node.children.push_back(std::move(arm));
    }
    if (peek().type != TokenType::Dedent) fail_here("invalid syntax");
    take();
    finish(node);
    return node;
  }

  SyntaxNode patterns() {
    const int start = peek().line;
    SyntaxNode first = maybe_star_pattern();
    if (!at_op(",")) {
      if (first.label == "MatchStar") fail_node(first, "invalid syntax");
      return first;
    }
    SyntaxNode seq = make_other("MatchSequence", start, start);
    seq.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op(":") || at_keyword("if")) break;
      seq.children.push_back(maybe_star_pattern());
    }
    finish(seq);
    return seq;
  }

  SyntaxNode maybe_star_pattern() {
    if (at_op("*")) {
      const Token star = take();
      expect_identifier();
      return make_other("MatchStar", star.line, prev_end_);
    }
    return pattern();
  }

  SyntaxNode pattern() {
    const int start = peek().line;
    SyntaxNode p = or_pattern();
    if (accept_keyword("as")) {
      const Token name = expect_identifier();
      if (name.text == "_") fail_here("cannot use '_' as a target");
      SyntaxNode as = make_other("MatchAs", start, name.line);
      as.children.push_back(std::move(p));
      return as;
    }
    return p;
  }

  SyntaxNode or_pattern() {
    const int start = peek().line;
    SyntaxNode first = closed_pattern();
    if (!at_op("|")) return first;
    SyntaxNode node = make_other("MatchOr", start, start);
    node.children.push_back(std::move(first));
    while (accept_op("|")) node.children.push_back(closed_pattern());
    finish(node);
    return node;
  }

  SyntaxNode literal_pattern_value() {
    // signed number, optional complex part, or strings
    if (peek().type == TokenType::String) return strings();
    const int start = peek().line;
    SyntaxNode value;
    if (at_op("-")) {
      take();
      SyntaxNode num = number_atom();
      value = make_other("UnaryOp", start, num.span.line_end);
      value.children.push_back(std::move(num));
    } else {
      value = number_atom();
    }
    if (at_op("+") || at_op("-")) {
      take();
      SyntaxNode imag = number_atom();
      SyntaxNode bin = make_other("BinOp", start, imag.span.line_end);
      bin.children.push_back(std::move(value));
      bin.children.push_back(std::move(imag));
      value = std::move(bin);
    }
    return value;
  }

  SyntaxNode closed_pattern() {
    const Token& t = peek();
    if (t.type == TokenType::Number || t.type == TokenType::String || at_op("-")) {
      SyntaxNode value = literal_pattern_value();
      SyntaxNode node = make_other("MatchValue", value.span.line_start, prev_end_);
      node.children.push_back(std::move(value));
      return node;
    }
    if (at_keyword("None") || at_keyword("True") || at_keyword("False")) {
      const Token kw = take();
      return make_other("MatchSingleton", kw.line, kw.line);
    }
    if (at_op("(") || at_op("[")) {
      const Token open = take();
      const std::string close = open.text == "(" ? ")" : "]";
      std::vector<SyntaxNode> items;
      bool comma = false;
      while (!at_op(close)) {
        items.push_back(maybe_star_pattern());
        if (!accept_op(",")) break;
        comma = true;
      }
      expect_op(close);
      if (open.text == "(" && items.size() == 1 && !comma && items.front().label != "MatchStar") {
        return std::move(items.front());
      }
      SyntaxNode seq = make_other("MatchSequence", open.line, prev_end_);
      append(seq, std::move(items));
      return seq;
    }
    if (at_op("{")) return mapping_pattern();
    if (at_identifier()) {
      const Token first = take();
      SyntaxNode target = make_node(NodeKind::Name, first.line, first.line);
      target.name = first.text;
      bool dotted = false;
      while (at_op(".")) {
        take();
        const Token attr = expect_identifier();
        SyntaxNode node = make_node(NodeKind::Attribute, first.line, attr.line);
        node.name = attr.text;
        node.children.push_back(std::move(target));
        target = std::move(node);
        dotted = true;
      }
      if (at_op("(")) return class_pattern(std::move(target));
      if (dotted) {
        SyntaxNode node = make_other("MatchValue", target.span.line_start, prev_end_);
        node.children.push_back(std::move(target));
        return node;
      }
      // capture or wildcard: the name is not an expression node
      return make_other("MatchAs", first.line, first.line);
    }
    fail_here("invalid syntax");
  }

  SyntaxNode mapping_pattern() {
    const Token open = expect_op("{");
    SyntaxNode node = make_other("MatchMapping", open.line, open.line);
    while (!at_op("}")) {
      if (accept_op("**")) {
        expect_identifier();
        accept_op(",");
        break;
      }
      if (at_identifier()) {
        const Token first = take();
        SyntaxNode key = make_node(NodeKind::Name, first.line, first.line);
        key.name = first.text;
        if (!at_op(".")) fail_here("invalid syntax");
        while (accept_op(".")) {
          const Token attr = expect_identifier();
          SyntaxNode a = make_node(NodeKind::Attribute, first.line, attr.line);
          a.name = attr.text;
          a.children.push_back(std::move(key));
          key = std::move(a);
        }
        node.children.push_back(std::move(key));
      } else if (at_keyword("None") || at_keyword("True") || at_keyword("False")) {
        node.children.push_back(atom());
      } else {
        node.children.push_back(literal_pattern_value());
      }
      expect_op(":");
      node.children.push_back(pattern());
      if (!accept_op(",")) break;
    }
    expect_op("}");
    node.span.line_end = prev_end_;
    return node;
  }

  SyntaxNode class_pattern(SyntaxNode cls) {
    SyntaxNode node = make_other("MatchClass", cls.span.line_start, cls.span.line_end);
    node.children.push_back(std::move(cls));
    expect_op("(");
    bool keywords = false;
    while (!at_op(")")) {
      if (at_identifier() && at_op("=", 1)) {
        take();
        take();
        keywords = true;
        node.children.push_back(pattern());
      } else {
        if (keywords) fail_here("positional patterns follow keyword patterns");
        node.children.push_back(pattern());
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    node.span.line_end = prev_end_;
    return node;
  }

  // ---- expressions ---------------------------------------------------

  SyntaxNode yield_or_star_expressions() {
    if (at_keyword("yield")) return yield_expression();
    return star_expressions();
  }

  SyntaxNode yield_expression() {
    const Token kw = expect_keyword("yield");
    if (accept_keyword("from")) {
      SyntaxNode node = make_other("YieldFrom", kw.line, kw.line);
      node.children.push_back(expression());
      finish(node);
      return node;
    }
    SyntaxNode node = make_other("Yield", kw.line, kw.line);
    if (!at_statement_end() && !at_op(")") && !at_op("]") && !at_op("}") && !at_op("=")) {
      node.children.push_back(star_expressions());
    }
    finish(node);
    return node;
  }

  // Comma-separated sequence; a trailing comma or more than one element
  // makes a tuple.
  template <typename ElementFn>
  SyntaxNode tuple_of(ElementFn element) {
    const int start = peek().line;
    SyntaxNode first = (this->*element)();
    if (!at_op(",")) return first;
    SyntaxNode tuple = make_other("Tuple", start, start);
    tuple.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression()) break;
      tuple.children.push_back((this->*element)());
    }
    finish(tuple);
    return tuple;
  }

  bool starts_expression() const {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::Name:
        if (!is_keyword(t.text)) return true;
        return t.text == "None" || t.text == "True" || t.text == "False" || t.text == "not" ||
               t.text == "lambda" || t.text == "await" || t.text == "yield";
      case TokenType::Number:
      case TokenType::String:
        return true;
      case TokenType::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  SyntaxNode star_expressions() { return tuple_of(&Parser::star_expression); }

  SyntaxNode star_expression() {
    if (at_op("*")) {
      const Token star = take();
      SyntaxNode node = make_other("Starred", star.line, star.line);
      node.children.push_back(bitwise_or());
      finish(node);
      return node;
    }
    return expression();
  }

  SyntaxNode star_named_expression() {
    if (at_op("*")) return star_expression();
    return named_expression();
  }

  SyntaxNode star_targets() { return tuple_of(&Parser::star_target); }

  SyntaxNode star_target() {
    if (at_op("*")) {
      const Token star = take();
      SyntaxNode node = make_other("Starred", star.line, star.line);
      node.children.push_back(star_target());
      finish(node);
      return node;
    }
    return bitwise_or();
  }

  SyntaxNode named_expression() {
    if (at_identifier() && at_op(":=", 1)) {
      const Token name = take();
      take();
      SyntaxNode node = make_other("NamedExpr", name.line, name.line);
      SyntaxNode target = make_node(NodeKind::Name, name.line, name.line);
      target.name = name.text;
      node.children.push_back(std::move(target));
      node.children.push_back(expression());
      finish(node);
      return node;
    }
    SyntaxNode expr = expression();
    if (at_op(":=")) fail_node(expr, "cannot use assignment expressions with " + describe(expr));
    return expr;
  }

  SyntaxNode expression() {
    if (at_keyword("lambda")) return lambda();
    const int start = peek().line;
    SyntaxNode body = disjunction();
    if (at_keyword("if")) {
      take();
      SyntaxNode node = make_other("IfExp", start, start);
      node.children.push_back(std::move(body));
      node.children.push_back(disjunction());
      expect_keyword("else");
      node.children.push_back(expression());
      finish(node);
      return node;
    }
    return body;
  }

  SyntaxNode lambda() {
    const Token kw = expect_keyword("lambda");
    SyntaxNode node = make_other("Lambda", kw.line, kw.line);
    append(node, parameters(":", false));
    expect_op(":");
    node.children.push_back(expression());
    finish(node);
    return node;
  }

  SyntaxNode bool_chain(std::string_view op, SyntaxNode (Parser::*operand)()) {
    const int start = peek().line;
    SyntaxNode first = (this->*operand)();
    if (!at_keyword(op)) return first;
    SyntaxNode node = make_other("BoolOp", start, start);
    node.children.push_back(std::move(first));
    while (accept_keyword(op)) node.children.push_back((this->*operand)());
    finish(node);
    return node;
  }

  SyntaxNode disjunction() { return bool_chain("or", &Parser::conjunction); }
  SyntaxNode conjunction() { return bool_chain("and", &Parser::inversion); }

  SyntaxNode inversion() {
    if (at_keyword("not")) {
      const Token kw = take();
      SyntaxNode node = make_other("UnaryOp", kw.line, kw.line);
      node.children.push_back(inversion());
      finish(node);
      return node;
    }
    return comparison();
  }

  SyntaxNode comparison() {
    const int start = peek().line;
    SyntaxNode left = bitwise_or();
    if (!is_compare_op(peek()) || (at_keyword("not") && !at_keyword("in", 1))) return left;
    SyntaxNode node = make_other("Compare", start, start);
    node.children.push_back(std::move(left));
    while (is_compare_op(peek())) {
      if (at_keyword("not")) {
        if (!at_keyword("in", 1)) break;
        take();
        take();
      } else if (at_keyword("is")) {
        take();
        accept_keyword("not");
      } else {
        take();
      }
      node.children.push_back(bitwise_or());
    }
    finish(node);
    return node;
  }

  SyntaxNode binary_level(std::initializer_list<std::string_view> ops,
                          SyntaxNode (Parser::*operand)()) {
    const int start = peek().line;
    SyntaxNode left = (this->*operand)();
    while (true) {
      bool matched = false;
      for (const auto op : ops) {
        if (at_op(op)) {
          matched = true;
          break;
        }
      }
      if (!matched) return left;
      take();
      SyntaxNode node = make_other("BinOp", start, start);
      node.children.push_back(std::move(left));
      node.children.push_back((this->*operand)());
      finish(node);
      left = std::move(node);
    }
  }

  SyntaxNode bitwise_or() { return binary_level({"|"}, &Parser::bitwise_xor); }
  SyntaxNode bitwise_xor() { return binary_level({"^"}, &Parser::bitwise_and); }
  SyntaxNode bitwise_and() { return binary_level({"&"}, &Parser::shift_expr); }
  SyntaxNode shift_expr() { return binary_level({"<<", ">>"}, &Parser::sum); }
  SyntaxNode sum() { return binary_level({"+", "-"}, &Parser::term); }
  SyntaxNode term() { return binary_level({"*", "/", "//", "%", "@"}, &Parser::factor); }

  SyntaxNode factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Token op = take();
      SyntaxNode node = make_other("UnaryOp", op.line, op.line);
      node.children.push_back(factor());
      finish(node);
      return node;
    }
    return power();
  }

  SyntaxNode power() {
    const int start = peek().line;
    SyntaxNode base = await_primary();
    if (!at_op("**")) return base;
    take();
    SyntaxNode node = make_other("BinOp", start, start);
    node.children.push_back(std::move(base));
    node.children.push_back(factor());
    finish(node);
    return node;
  }

  SyntaxNode await_primary() {
    if (at_keyword("await")) {
      const Token kw = take();
      SyntaxNode node = make_other("Await", kw.line, kw.line);
      node.children.push_back(primary());
      finish(node);
      return node;
    }
    return primary();
  }

  SyntaxNode primary() {
    const int start = peek().line;
    SyntaxNode node = atom();
    while (true) {
      if (at_op(".")) {
        take();
        const Token attr = expect_identifier();
        SyntaxNode a = make_node(NodeKind::Attribute, start, attr.line);
        a.name = attr.text;
        a.children.push_back(std::move(node));
        node = std::move(a);
      } else if (at_op("(")) {
        const Token open = take();
        SyntaxNode call = make_node(NodeKind::Call, start, start);
        call.children.push_back(std::move(node));
        auto [args, keywords] = call_arguments(open.line);
        const Token close = expect_op(")");
        if (last_call_bare_generator_) args.front().span.line_end = close.end_line;
        call.attrs = CallAttrs{args.size(), keywords.size()};
        append(call, std::move(args));
        append(call, std::move(keywords));
        call.span.line_end = close.end_line;
        node = std::move(call);
      } else if (at_op("[")) {
        take();
        SyntaxNode sub = make_other("Subscript", start, start);
        sub.children.push_back(std::move(node));
        sub.children.push_back(slices());
        sub.span.line_end = expect_op("]").end_line;
        node = std::move(sub);
      } else {
        return node;
      }
    }
  }

  std::pair<std::vector<SyntaxNode>, std::vector<SyntaxNode>> call_arguments(int open_line = 0) {
    std::vector<SyntaxNode> args;
    std::vector<SyntaxNode> keywords;
    bool seen_keyword = false;
    bool seen_double_star = false;
    std::size_t count = 0;
    bool bare_generator = false;
    while (!at_op(")")) {
      ++count;
      if (at_op("**")) {
        const Token op = take();
        SyntaxNode kw = make_node(NodeKind::KeywordArg, op.line, op.line);
        kw.label = "keyword";
        kw.children.push_back(expression());
        finish(kw);
        keywords.push_back(std::move(kw));
        seen_double_star = true;
      } else if (at_op("*")) {
        if (seen_double_star) {
          fail_here("iterable argument unpacking follows keyword argument unpacking");
        }
        args.push_back(star_expression());
      } else if (at_identifier() && at_op("=", 1)) {
        const Token name = take();
        take();
        SyntaxNode kw = make_node(NodeKind::KeywordArg, name.line, name.line);
        kw.label = "keyword";
        kw.name = name.text;
        kw.children.push_back(expression());
        finish(kw);
        keywords.push_back(std::move(kw));
        seen_keyword = true;
      } else {
        SyntaxNode arg = named_expression();
        if (at_op("=")) fail_node(arg, "expression cannot contain assignment, perhaps you meant \"==\"?");
        if (at_keyword("for") || at_keyword("async")) {
          arg = comprehension_tail("GeneratorExp", std::move(arg), open_line);
          if (!at_op(")") || count > 1) fail_node(arg, "Generator expression must be parenthesized");
          bare_generator = true;
        }
        if (seen_double_star) fail_node(arg, "positional argument follows keyword argument unpacking");
        if (seen_keyword) fail_node(arg, "positional argument follows keyword argument");
        args.push_back(std::move(arg));
      }
      if (!accept_op(",")) break;
      if (bare_generator && !at_op(")")) {
        fail_node(args.back(), "Generator expression must be parenthesized");
      }
    }
    last_call_bare_generator_ = bare_generator;
    return {std::move(args), std::move(keywords)};
  }

  SyntaxNode slice_item() {
    const int start = peek().line;
    SyntaxNode lower;
    bool has_lower = false;
    if (!at_op(":")) {
      lower = named_expression();
      has_lower = true;
      if (!at_op(":")) return lower;
    }
    SyntaxNode slice = make_other("Slice", start, start);
    if (has_lower) slice.children.push_back(std::move(lower));
    expect_op(":");
    if (!at_op(":") && !at_op("]") && !at_op(",")) slice.children.push_back(expression());
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) slice.children.push_back(expression());
    }
    slice.span.line_end = std::max(slice.span.line_start, prev_end_);
    finish(slice);
    return slice;
  }

  SyntaxNode slices() {
    const int start = peek().line;
    SyntaxNode first = slice_item();
    if (!at_op(",")) return first;
    SyntaxNode tuple = make_other("Tuple", start, start);
    tuple.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      tuple.children.push_back(slice_item());
    }
    finish(tuple);
    return tuple;
  }

  SyntaxNode comprehension_tail(std::string label, SyntaxNode element, int start_line = 0) {
    SyntaxNode node = make_other(std::move(label), element.span.line_start, element.span.line_end);
    if (start_line > 0) node.span.line_start = std::min(node.span.line_start, start_line);
    node.children.push_back(std::move(element));
    comprehension_clauses(node);
    return node;
  }

  void comprehension_clauses(SyntaxNode& node) {
    while (at_keyword("for") || (at_keyword("async") && at_keyword("for", 1))) {
      accept_keyword("async");
      const Token kw = expect_keyword("for");
      SyntaxNode clause = make_other("comprehension", kw.line, kw.line);
      SyntaxNode target = star_targets();
      validate_target(target, TargetContext::Assign);
      clause.span.line_start = target.span.line_start;
      clause.children.push_back(std::move(target));
      expect_keyword("in");
      clause.children.push_back(disjunction());
      while (accept_keyword("if")) clause.children.push_back(disjunction());
      finish(clause);
      node.children.push_back(std::move(clause));
    }
    finish(node);
  }

  SyntaxNode number_atom() {
    if (peek().type != TokenType::Number) fail_here("invalid syntax");
    const Token tok = take();
    SyntaxNode node = make_node(NodeKind::Constant, tok.line, tok.end_line);
    node.attrs = parse_number(tok.text);
    return node;
  }

  SyntaxNode strings();

  SyntaxNode atom() {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::Number:
        return number_atom();
      case TokenType::String:
        return strings();
      case TokenType::Name: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          const Token kw = take();
          SyntaxNode node = make_node(NodeKind::Constant, kw.line, kw.line);
          ConstantAttrs c;
          c.type = kw.text == "None" ? ConstantType::None : ConstantType::Bool;
          c.text = kw.text;
          node.attrs = std::move(c);
          return node;
        }
        if (is_keyword(t.text)) fail_here("invalid syntax");
        const Token name = take();
        SyntaxNode node = make_node(NodeKind::Name, name.line, name.line);
        node.name = name.text;
        return node;
      }
      case TokenType::Op:
        if (t.text == "(") return paren_atom();
        if (t.text == "[") return list_atom();
        if (t.text == "{") return brace_atom();
        if (t.text == "...") {
          const Token dots = take();
          SyntaxNode node = make_node(NodeKind::Constant, dots.line, dots.line);
          node.attrs = ConstantAttrs{ConstantType::Ellipsis, "...", std::nullopt, std::nullopt};
          return node;
        }
        break;
      default:
        break;
    }
    fail_here("invalid syntax");
  }

  SyntaxNode paren_atom() {
    const Token open = expect_op("(");
    if (at_op(")")) {
      const Token close = take();
      return make_other("Tuple", open.line, close.end_line);
    }
    if (at_keyword("yield")) {
      SyntaxNode y = yield_expression();
      expect_op(")");
      return y;
    }
    SyntaxNode first = star_named_expression();
    if (at_keyword("for") || at_keyword("async")) {
      SyntaxNode gen = comprehension_tail("GeneratorExp", std::move(first), open.line);
      gen.span.line_end = expect_op(")").end_line;
      return gen;
    }
    if (at_op(")")) {
      take();
      if (first.label == "Starred") fail_node(first, "cannot use starred expression here");
      return first;
    }
    SyntaxNode tuple = make_other("Tuple", open.line, open.line);
    tuple.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op(")")) break;
      tuple.children.push_back(star_named_expression());
    }
    tuple.span.line_end = expect_op(")").end_line;
    return tuple;
  }

  SyntaxNode list_atom() {
    const Token open = expect_op("[");
    if (at_op("]")) return make_other("List", open.line, take().end_line);
    SyntaxNode first = star_named_expression();
    if (at_keyword("for") || at_keyword("async")) {
      SyntaxNode comp = comprehension_tail("ListComp", std::move(first), open.line);
      comp.span.line_end = expect_op("]").end_line;
      return comp;
    }
    SyntaxNode list = make_other("List", open.line, open.line);
    list.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      list.children.push_back(star_named_expression());
    }
    list.span.line_end = expect_op("]").end_line;
    return list;
  }

  SyntaxNode brace_atom() {
    const Token open = expect_op("{");
    if (at_op("}")) return make_other("Dict", open.line, take().end_line);

    if (at_op("**")) return dict_rest(open, std::nullopt);
    SyntaxNode first = star_named_expression();
    if (accept_op(":")) {
      SyntaxNode value = expression();
      if (at_keyword("for") || at_keyword("async")) {
        SyntaxNode comp = make_other("DictComp", open.line, open.line);
        comp.children.push_back(std::move(first));
        comp.children.push_back(std::move(value));
        comprehension_clauses(comp);
        comp.span.line_end = expect_op("}").end_line;
        return comp;
      }
      std::vector<SyntaxNode> pair;
      pair.push_back(std::move(first));
      pair.push_back(std::move(value));
      return dict_rest(open, std::move(pair));
    }
    if (at_keyword("for") || at_keyword("async")) {
      SyntaxNode comp = comprehension_tail("SetComp", std::move(first), open.line);
      comp.span.line_end = expect_op("}").end_line;
      return comp;
    }
    SyntaxNode set = make_other("Set", open.line, open.line);
    set.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("}")) break;
      set.children.push_back(star_named_expression());
    }
    set.span.line_end = expect_op("}").end_line;
    return set;
  }

  SyntaxNode dict_rest(const Token& open, std::optional<std::vector<SyntaxNode>> first_pair) {
    SyntaxNode dict = make_other("Dict", open.line, open.line);
    bool need_item = true;
    if (first_pair) {
      append(dict, std::move(*first_pair));
      need_item = accept_op(",");
    }
    while (need_item && !at_op("}")) {
      if (accept_op("**")) {
        dict.children.push_back(bitwise_or());
      } else {
        dict.children.push_back(expression());
        expect_op(":");
        dict.children.push_back(expression());
      }
      need_item = accept_op(",");
    }
    dict.span.line_end = expect_op("}").end_line;
    return dict;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int prev_end_ = 1;
  int line_count_ = 1;
};

// Replacement-field expressions inside an f-string body.
void collect_fstring_fields(std::string_view body, int line_start, int line_end,
                            std::vector<SyntaxNode>& out, int depth = 0);

SyntaxNode parse_field_expression(std::string_view expr, int line_start, int line_end) {
  if (expr.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ParseFailure(line_start, 1, "f-string: empty expression not allowed");
  }
  if (expr.find('\\') != std::string_view::npos) {
    throw ParseFailure(line_start, 1, "f-string expression part cannot include a backslash");
  }
  if (expr.find('#') != std::string_view::npos) {
    throw ParseFailure(line_start, 1, "f-string expression part cannot include '#'");
  }
  std::string wrapped = "(" + std::string(expr) + "\n)";
  std::vector<Token> toks;
  try {
    toks = tokenize(wrapped);
  } catch (const ParseFailure& err) {
    throw ParseFailure(line_start, 1, "f-string: " + err.message);
  }
  Parser sub(std::move(toks), 1);
  SyntaxNode node;
  try {
    node = sub.parse_fstring_expression();
  } catch (const ParseFailure& err) {
    throw ParseFailure(line_start, 1, "f-string: " + err.message);
  }
  // Nested spans are pinned to the enclosing string literal.
  std::vector<SyntaxNode*> stack{&node};
  while (!stack.empty()) {
    SyntaxNode* n = stack.back();
    stack.pop_back();
    n->span = Span{line_start, line_end};
    for (auto& c : n->children) stack.push_back(&c);
  }
  return node;
}

void collect_fstring_fields(std::string_view body, int line_start, int line_end,
                            std::vector<SyntaxNode>& out, int depth) {
  if (depth > 2) throw ParseFailure(line_start, 1, "f-string: expressions nested too deeply");
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        i += 2;
        continue;
      }
      // Scan the expression up to a top-level '!', ':', '=' or '}'.
      std::size_t j = i + 1;
      int nesting = 0;
      char quote = 0;
      std::size_t expr_end = std::string_view::npos;
      for (; j < body.size(); ++j) {
        const char d = body[j];
        if (quote) {
          if (d == quote) quote = 0;
          continue;
        }
        if (d == '\'' || d == '"') {
          quote = d;
        } else if (d == '(' || d == '[' || d == '{') {
          ++nesting;
        } else if (d == ')' || d == ']' || (d == '}' && nesting > 0)) {
          --nesting;
        } else if (nesting == 0) {
          if (d == '}' || d == ':') {
            expr_end = j;
            break;
          }
          if (d == '!' && j + 1 < body.size() && body[j + 1] != '=') {
            expr_end = j;
            break;
          }
          if (d == '=' && j + 1 < body.size() && body[j + 1] != '=' && j > i + 1 &&
              std::string_view("=!<>").find(body[j - 1]) == std::string_view::npos) {
            expr_end = j;
            break;
          }
        }
      }
      if (quote) throw ParseFailure(line_start, 1, "f-string: unterminated string");
      if (expr_end == std::string_view::npos) throw ParseFailure(line_start, 1, "f-string: expecting '}'");
      out.push_back(parse_field_expression(body.substr(i + 1, expr_end - i - 1), line_start, line_end));
      j = expr_end;
      if (body[j] == '=') ++j;
      if (j < body.size() && body[j] == '!') {
        j += 2;
        if (j > body.size()) throw ParseFailure(line_start, 1, "f-string: expecting '}'");
      }
      if (j < body.size() && body[j] == ':') {
        // Format spec: may itself contain replacement fields.
        std::size_t k = j + 1;
        int spec_nesting = 0;
        for (; k < body.size(); ++k) {
          if (body[k] == '{') ++spec_nesting;
          if (body[k] == '}') {
            if (spec_nesting == 0) break;
            --spec_nesting;
          }
        }
        collect_fstring_fields(body.substr(j + 1, k - j - 1), line_start, line_end, out, depth + 1);
        j = k;
      }
      if (j >= body.size() || body[j] != '}') throw ParseFailure(line_start, 1, "f-string: expecting '}'");
      i = j + 1;
    } else if (c == '}') {
      if (i + 1 < body.size() && body[i + 1] == '}') {
        i += 2;
        continue;
      }
      throw ParseFailure(line_start, 1, "f-string: single '}' is not allowed");
    } else {
      ++i;
    }
  }
}

SyntaxNode Parser::strings() {
  const int start = peek().line;
  bool any_fstring = false;
  bool any_bytes = false;
  bool any_text = false;
  std::string decoded;
  std::vector<SyntaxNode> fields;
  while (peek().type == TokenType::String) {
    const Token tok = take();
    const StringLiteral lit = split_string_literal(tok.text);
    if (lit.is_bytes) {
      any_bytes = true;
    } else {
      any_text = true;
    }
    if (any_bytes && any_text) {
      throw ParseFailure(tok.line, tok.column, "cannot mix bytes and nonbytes literals");
    }
    if (lit.is_fstring) {
      any_fstring = true;
      collect_fstring_fields(lit.body, tok.line, tok.end_line, fields);
    } else {
      try {
        decoded += lit.is_raw ? std::string(lit.body) : decode_escapes(lit.body, lit.is_bytes);
      } catch (const std::invalid_argument& err) {
        throw ParseFailure(tok.line, tok.column, err.what());
      }
    }
  }
  if (any_fstring) {
    SyntaxNode node = make_other("JoinedStr", start, prev_end_);
    append(node, std::move(fields));
    std::vector<SyntaxNode*> stack;
    for (auto& c : node.children) stack.push_back(&c);
    while (!stack.empty()) {
      SyntaxNode* n = stack.back();
      stack.pop_back();
      n->span = node.span;
      for (auto& c : n->children) stack.push_back(&c);
    }
    return node;
  }
  SyntaxNode node = make_node(NodeKind::Constant, start, prev_end_);
  ConstantAttrs c;
  c.type = any_bytes ? ConstantType::Bytes : ConstantType::Str;
  c.text = std::move(decoded);
  node.attrs = std::move(c);
  return node;
}

}  // namespace

SyntaxNode parse_tokens(std::vector<Token> tokens, int line_count) {
  return Parser(std::move(tokens), line_count).parse_module();
}

}  // namespace detail
}  // namespace refactorkit::pytree
