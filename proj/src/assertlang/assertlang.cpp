#include "refactorkit/assertlang.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

namespace refactorkit::assertlang {

namespace fs = std::filesystem;
using pytree::NodeKind;
using pytree::SyntaxNode;

namespace {

constexpr std::array<std::string_view, 11> kKindNames = {
    "FileExists",        "ClassDefined",  "DefinitionAbsent", "UsageAbsent",
    "SelfAttrAssigned",  "FunctionSignature", "MethodDefined", "CallArgMatches",
    "CallKeyword",       "ImportsFrom",   "ImportAbsent",
};

constexpr std::array<std::string_view, 4> kMatcherNames = {"any", "is_name", "is_attribute", "is_constant"};

constexpr std::array<std::string_view, 3> kStatusNames = {"pass", "fail", "error"};

// ---------------------------------------------------------------- loading

std::string want_string(const Json& obj, const std::string& key, const std::string& loc) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(loc, "missing mandatory field '" + key + "'");
  if (!it->is_string() || it->get<std::string>().empty()) {
    throw SchemaError(loc + "." + key, "expected a non-empty string");
  }
  return it->get<std::string>();
}

std::optional<std::string> opt_string(const Json& obj, const std::string& key, const std::string& loc) {
  if (!obj.contains(key)) return std::nullopt;
  return want_string(obj, key, loc);
}

std::vector<std::string> want_strings(const Json& obj, const std::string& key, const std::string& loc) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(loc, "missing mandatory field '" + key + "'");
  if (!it->is_array() || it->empty()) throw SchemaError(loc + "." + key, "expected a non-empty array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string() || v.get<std::string>().empty()) {
      throw SchemaError(loc + "." + key, "expected a non-empty array of strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

Matcher parse_matcher(const Json& j, const std::string& loc) {
  if (!j.is_object()) throw SchemaError(loc, "matcher must be an object");
  reject_unknown_keys(j, {"kind", "name", "attr", "value"}, loc);
  const std::string kind = want_string(j, "kind", loc);
  const auto it = std::find(kMatcherNames.begin(), kMatcherNames.end(), kind);
  if (it == kMatcherNames.end()) throw SchemaError(loc + ".kind", "unknown matcher kind '" + kind + "'");
  Matcher m;
  m.kind = static_cast<MatcherKind>(it - kMatcherNames.begin());
  m.name = opt_string(j, "name", loc);
  m.attr = opt_string(j, "attr", loc);
  if (j.contains("value")) m.value = j.at("value");
  if (m.name && m.kind != MatcherKind::IsName) throw SchemaError(loc, "'name' is only valid for is_name");
  if (m.attr.has_value() != (m.kind == MatcherKind::IsAttribute)) {
    throw SchemaError(loc, "'attr' must be present exactly for is_attribute");
  }
  if (m.value.has_value() != (m.kind == MatcherKind::IsConstant)) {
    throw SchemaError(loc, "'value' must be present exactly for is_constant");
  }
  if (m.value && m.value->is_structured()) throw SchemaError(loc + ".value", "expected a scalar literal");
  return m;
}

Json matcher_json(const Matcher& m) {
  Json j;
  j["kind"] = kMatcherNames[static_cast<std::size_t>(m.kind)];
  if (m.name) j["name"] = *m.name;
  if (m.attr) j["attr"] = *m.attr;
  if (m.value) j["value"] = *m.value;
  return j;
}

std::size_t want_index(const Json& obj, const std::string& key, const std::string& loc) {
  const Json& v = obj.at(key);
  if (!v.is_number_unsigned()) throw SchemaError(loc + "." + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

bool valid_relpath(const std::string& p) {
  if (p.empty() || p.front() == '/') return false;
  for (const auto& part : fs::path(p)) {
    if (part == "..") return false;
  }
  return true;
}

Assertion parse_assertion(const Json& j, const std::string& loc) {
  if (!j.is_object()) throw SchemaError(loc, "assertion must be an object");
  Assertion a;
  a.id = want_string(j, "id", loc);
  static const std::regex kId("[a-z0-9_]+");
  if (!std::regex_match(a.id, kId)) throw SchemaError(loc + ".id", "id must match [a-z0-9_]+");
  const std::string kind = want_string(j, "kind", loc);
  const auto k = assertion_kind_from_string(kind);
  if (!k) throw SchemaError(loc + ".kind", "unknown assertion kind '" + kind + "'");
  a.kind = *k;
  a.path = want_string(j, "path", loc);
  if (!valid_relpath(a.path)) throw SchemaError(loc + ".path", "path must be repo-relative");
  a.failure_message = opt_string(j, "failure_message", loc);

  auto scope = [&] {
    if (!j.contains("scope")) return;
    const Json& s = j.at("scope");
    const std::string sloc = loc + ".scope";
    if (!s.is_object()) throw SchemaError(sloc, "scope must be an object");
    reject_unknown_keys(s, {"class", "function"}, sloc);
    Scope sc{opt_string(s, "class", sloc), opt_string(s, "function", sloc)};
    if (!sc.class_name && !sc.function) throw SchemaError(sloc, "scope needs 'class' or 'function'");
    a.params.scope = sc;
  };

  Params& p = a.params;
  switch (a.kind) {
    case AssertionKind::FileExists:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message"}, loc);
      break;
    case AssertionKind::ClassDefined:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "class"}, loc);
      p.class_name = want_string(j, "class", loc);
      break;
    case AssertionKind::DefinitionAbsent:
    case AssertionKind::UsageAbsent:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "name"}, loc);
      p.name = want_string(j, "name", loc);
      break;
    case AssertionKind::SelfAttrAssigned:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "class", "attrs"}, loc);
      p.class_name = want_string(j, "class", loc);
      p.attrs = want_strings(j, "attrs", loc);
      break;
    case AssertionKind::FunctionSignature: {
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "function", "params", "returns", "scope"},
                          loc);
      p.function = want_string(j, "function", loc);
      if (!j.contains("params")) throw SchemaError(loc, "missing mandatory field 'params'");
      const Json& ps = j.at("params");
      if (!ps.is_array()) throw SchemaError(loc + ".params", "expected an array");
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string ploc = loc + ".params[" + std::to_string(i) + "]";
        if (!ps[i].is_object()) throw SchemaError(ploc, "expected an object");
        reject_unknown_keys(ps[i], {"name", "annotation"}, ploc);
        p.params.push_back({opt_string(ps[i], "name", ploc), opt_string(ps[i], "annotation", ploc)});
      }
      p.returns = opt_string(j, "returns", loc);
      scope();
      break;
    }
    case AssertionKind::MethodDefined:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "class", "method"}, loc);
      p.class_name = want_string(j, "class", loc);
      p.method = want_string(j, "method", loc);
      break;
    case AssertionKind::CallArgMatches: {
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "callee", "arg_index", "arg_count",
                              "matcher", "scope"},
                          loc);
      p.callee = want_string(j, "callee", loc);
      if (!j.contains("arg_index")) throw SchemaError(loc, "missing mandatory field 'arg_index'");
      p.arg_index = want_index(j, "arg_index", loc);
      if (j.contains("arg_count")) p.arg_count = want_index(j, "arg_count", loc);
      if (!j.contains("matcher")) throw SchemaError(loc, "missing mandatory field 'matcher'");
      const Json& m = j.at("matcher");
      if (m.is_array()) {
        if (m.empty()) throw SchemaError(loc + ".matcher", "expected at least one matcher");
        for (std::size_t i = 0; i < m.size(); ++i) {
          p.matchers.push_back(parse_matcher(m[i], loc + ".matcher[" + std::to_string(i) + "]"));
        }
      } else {
        p.matchers.push_back(parse_matcher(m, loc + ".matcher"));
      }
      scope();
      break;
    }
    case AssertionKind::CallKeyword:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "callee", "keyword", "value", "scope"},
                          loc);
      p.callee = want_string(j, "callee", loc);
      p.keyword = want_string(j, "keyword", loc);
      if (j.contains("value")) p.value = parse_matcher(j.at("value"), loc + ".value");
      scope();
      break;
    case AssertionKind::ImportsFrom:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "module", "names"}, loc);
      p.module = want_string(j, "module", loc);
      p.names = want_strings(j, "names", loc);
      break;
    case AssertionKind::ImportAbsent:
      reject_unknown_keys(j, {"id", "kind", "path", "failure_message", "module", "name"}, loc);
      p.module = want_string(j, "module", loc);
      p.name = want_string(j, "name", loc);
      break;
  }
  return a;
}

// ------------------------------------------------------------- evaluation

std::string substitute(std::string text, const std::vector<std::pair<std::string, std::string>>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    for (std::size_t pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
      text.replace(pos, token.size(), value);
    }
  }
  return text;
}

class Evaluator {
 public:
  Evaluator(const Assertion& a, const pytree::SyntaxTree& tree) : a_(a), tree_(tree) {}

  // nullopt means pass; otherwise the failure message.
  std::optional<std::string> run() {
    const Params& p = a_.params;
    switch (a_.kind) {
      case AssertionKind::FileExists:
        return std::nullopt;
      case AssertionKind::ClassDefined:
        if (find_class()) return std::nullopt;
        return message("Class '{class}' not found in {file}");
      case AssertionKind::DefinitionAbsent:
        for (const SyntaxNode* n : pytree::walk(tree_)) {
          if (n->is(NodeKind::ClassDef, *p.name) || n->is(NodeKind::FunctionDef, *p.name)) {
            return message("'{name}' is still defined in {path}");
          }
        }
        return std::nullopt;
      case AssertionKind::UsageAbsent:
        for (const SyntaxNode* n : pytree::walk(tree_)) {
          if (n->is(NodeKind::Name, *p.name) || n->is(NodeKind::Attribute, *p.name)) {
            return message("'{name}' found in {path}");
          }
        }
        return std::nullopt;
      case AssertionKind::SelfAttrAssigned:
        return self_attrs();
      case AssertionKind::FunctionSignature:
        return signature();
      case AssertionKind::MethodDefined: {
        const SyntaxNode* cls = find_class();
        if (!cls) return scope_message("Class '{class}' not found in {file}");
        if (!pytree::find_all(*cls, NodeKind::FunctionDef, *p.method).empty()) return std::nullopt;
        return message("Method '{method}' not found in {class} class");
      }
      case AssertionKind::CallArgMatches:
      case AssertionKind::CallKeyword:
        return calls();
      case AssertionKind::ImportsFrom:
        return imports_from();
      case AssertionKind::ImportAbsent:
        return import_absent();
    }
    return std::nullopt;
  }

  std::string message(const std::string& fallback, std::string item = {}) const {
    return render(a_.failure_message.value_or(fallback), std::move(item));
  }

 private:
  std::string render(const std::string& tmpl, std::string item) const {
    const Params& p = a_.params;
    const std::string cls = p.class_name ? *p.class_name : (p.scope && p.scope->class_name ? *p.scope->class_name : "");
    const std::string fn = p.function ? *p.function : (p.scope && p.scope->function ? *p.scope->function : "");
    return substitute(tmpl, {
                                {"path", a_.path},
                                {"file", basename_of(a_.path)},
                                {"name", !item.empty() ? item : p.name.value_or("")},
                                {"attr", item},
                                {"class", cls},
                                {"function", fn},
                                {"method", p.method.value_or("")},
                                {"module", p.module.value_or("")},
                                {"callee", p.callee.value_or("")},
                                {"keyword", p.keyword.value_or("")},
                            });
  }

  // Scope failures keep their own wording; the custom template names the
  // checked structure, not the missing container.
  std::string scope_message(const std::string& text) const { return render(text, {}); }

  const SyntaxNode* find_class(const std::string& name) const {
    const auto found = pytree::find_all(tree_, NodeKind::ClassDef, name);
    return found.empty() ? nullptr : found.front();
  }
  const SyntaxNode* find_class() const { return find_class(*a_.params.class_name); }

  // Subtrees the assertion searches, or a failure message when the scope is missing.
  std::variant<std::vector<const SyntaxNode*>, std::string> scope_roots() const {
    const auto& scope = a_.params.scope;
    if (!scope) return std::vector<const SyntaxNode*>{&tree_.root};
    const SyntaxNode* base = &tree_.root;
    if (scope->class_name) {
      base = find_class(*scope->class_name);
      if (!base) return scope_message("Class '{class}' not found in {file}");
    }
    if (!scope->function) return std::vector<const SyntaxNode*>{base};
    auto fns = pytree::find_all(*base, NodeKind::FunctionDef, *scope->function);
    if (fns.empty()) {
      return scope_message(scope->class_name ? "Method '{function}' not found in {class} class"
                                             : "Function '{function}' not found in {file}");
    }
    return fns;
  }

  std::optional<std::string> self_attrs() const {
    const SyntaxNode* cls = find_class();
    if (!cls) return scope_message("Class '{class}' not found in {file}");
    std::set<std::string> assigned;
    for (const SyntaxNode* n : pytree::walk(*cls)) {
      if (n->kind != NodeKind::Assign || n->children.empty()) continue;
      for (std::size_t i = 0; i + 1 < n->children.size(); ++i) {
        const SyntaxNode& target = n->children[i];
        if (target.kind == NodeKind::Attribute && target.name) assigned.insert(*target.name);
      }
    }
    for (const auto& attr : a_.params.attrs) {
      if (!assigned.contains(attr)) return message("Attribute 'self.{attr}' not found in {class} class", attr);
    }
    return std::nullopt;
  }

  bool signature_matches(const pytree::FunctionAttrs& fn) const {
    const Params& p = a_.params;
    auto positional = fn.positional_params();
    const bool in_class = p.scope && p.scope->class_name;
    if (in_class && !positional.empty() && (positional.front().name == "self" || positional.front().name == "cls")) {
      const bool listed = !p.params.empty() && p.params.front().name == positional.front().name;
      if (!listed) positional.erase(positional.begin());
    }
    if (positional.size() != p.params.size()) return false;
    for (std::size_t i = 0; i < positional.size(); ++i) {
      const ParamSpec& want = p.params[i];
      if (want.name && *want.name != positional[i].name) return false;
      if (want.annotation && positional[i].annotation != want.annotation) return false;
    }
    return !p.returns || fn.returns == p.returns;
  }

  std::optional<std::string> signature() const {
    auto roots = scope_roots();
    if (auto* err = std::get_if<std::string>(&roots)) return *err;
    for (const SyntaxNode* root : std::get<std::vector<const SyntaxNode*>>(roots)) {
      for (const SyntaxNode* fn : pytree::find_all(*root, NodeKind::FunctionDef, *a_.params.function)) {
        if (signature_matches(*fn->function())) return std::nullopt;
      }
    }
    return message("Function '{function}' with the expected signature not found in {file}");
  }

  bool callee_matches(const SyntaxNode& call) const {
    const SyntaxNode* func = call.call_func();
    if (!func) return false;
    const std::string& want = *a_.params.callee;
    if (want.find('.') == std::string::npos) return func->is(NodeKind::Name, want);
    return pytree::dotted_name(*func) == want;
  }

  bool call_satisfies(const SyntaxNode& call) const {
    const Params& p = a_.params;
    if (a_.kind == AssertionKind::CallArgMatches) {
      const auto args = call.call_args();
      if (p.arg_count && args.size() != *p.arg_count) return false;
      if (p.arg_index >= args.size()) return false;
      return std::any_of(p.matchers.begin(), p.matchers.end(),
                         [&](const Matcher& m) { return m.matches(args[p.arg_index]); });
    }
    for (const SyntaxNode& kw : call.call_keywords()) {
      if (kw.name != p.keyword) continue;
      if (!p.value || (!kw.children.empty() && p.value->matches(kw.children.front()))) return true;
    }
    return false;
  }

  std::optional<std::string> calls() const {
    auto roots = scope_roots();
    if (auto* err = std::get_if<std::string>(&roots)) return *err;
    for (const SyntaxNode* root : std::get<std::vector<const SyntaxNode*>>(roots)) {
      for (const SyntaxNode* call : pytree::find_all(*root, NodeKind::Call)) {
        if (callee_matches(*call) && call_satisfies(*call)) return std::nullopt;
      }
    }
    if (a_.kind == AssertionKind::CallKeyword) {
      return message("No call to '{callee}' passes keyword '{keyword}' in {file}");
    }
    return message("No call to '{callee}' has a matching argument in {file}");
  }

  std::optional<std::string> imports_from() const {
    std::set<std::string> found;
    for (const SyntaxNode* n : pytree::find_all(tree_, NodeKind::ImportFrom)) {
      const auto* imp = n->import();
      if (imp->module != *a_.params.module) continue;
      for (const auto& alias : imp->names) found.insert(alias.name);
    }
    for (const auto& name : a_.params.names) {
      if (!found.contains(name)) return message("Import '{name}' not found in {file}", name);
    }
    return std::nullopt;
  }

  std::optional<std::string> import_absent() const {
    const std::string& module = *a_.params.module;
    const std::string& name = *a_.params.name;
    for (const SyntaxNode* n : pytree::walk(tree_)) {
      const auto* imp = n->import();
      if (!imp) continue;
      bool hit = false;
      if (n->kind == NodeKind::ImportFrom && imp->module == module) {
        hit = std::any_of(imp->names.begin(), imp->names.end(),
                          [&](const auto& alias) { return alias.name == name || alias.name == "*"; });
      } else if (n->kind == NodeKind::Import) {
        hit = std::any_of(imp->names.begin(), imp->names.end(),
                          [&](const auto& alias) { return alias.name == module + "." + name; });
      }
      if (hit) return message("'{name}' is imported from '{module}' in {path}");
    }
    return std::nullopt;
  }

  const Assertion& a_;
  const pytree::SyntaxTree& tree_;
};

}  // namespace

// ------------------------------------------------------------------ public

std::string_view to_string(AssertionKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<AssertionKind> assertion_kind_from_string(std::string_view text) {
  const auto it = std::find(kKindNames.begin(), kKindNames.end(), text);
  if (it == kKindNames.end()) return std::nullopt;
  return static_cast<AssertionKind>(it - kKindNames.begin());
}

bool is_absence_kind(AssertionKind kind) {
  return kind == AssertionKind::DefinitionAbsent || kind == AssertionKind::UsageAbsent ||
         kind == AssertionKind::ImportAbsent;
}

std::string_view to_string(Status status) { return kStatusNames[static_cast<std::size_t>(status)]; }

std::optional<Status> status_from_string(std::string_view text) {
  const auto it = std::find(kStatusNames.begin(), kStatusNames.end(), text);
  if (it == kStatusNames.end()) return std::nullopt;
  return static_cast<Status>(it - kStatusNames.begin());
}

bool Matcher::matches(const SyntaxNode& node) const {
  switch (kind) {
    case MatcherKind::Any:
      return true;
    case MatcherKind::IsName:
      return node.kind == NodeKind::Name && (!name || node.name == name);
    case MatcherKind::IsAttribute:
      return node.kind == NodeKind::Attribute && node.name == attr;
    case MatcherKind::IsConstant: {
      const auto* c = node.constant();
      if (node.kind != NodeKind::Constant || !c) return false;
      const Json& v = *value;
      using pytree::ConstantType;
      if (v.is_null()) return c->type == ConstantType::None;
      if (v.is_boolean()) return c->type == ConstantType::Bool && c->text == (v.get<bool>() ? "True" : "False");
      if (v.is_string()) return c->type == ConstantType::Str && c->text == v.get<std::string>();
      if (v.is_number_integer() && c->type == ConstantType::Int) return c->int_value == v.get<std::int64_t>();
      if (v.is_number() && c->type == ConstantType::Float) return c->float_value == v.get<double>();
      if (v.is_number_float() && c->type == ConstantType::Int && c->int_value) {
        return static_cast<double>(*c->int_value) == v.get<double>();
      }
      return false;
    }
  }
  return false;
}

AssertionSuite load_suite(std::string_view document) {
  Json j;
  try {
    j = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw SchemaError("$", std::string("not valid JSON: ") + e.what());
  }
  return load_suite_json(j);
}

AssertionSuite load_suite_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("$", "suite must be an object");
  reject_unknown_keys(j, {"schema_version", "task_id", "assertions"}, "$");
  if (j.contains("schema_version") && j.at("schema_version") != kSuiteSchemaVersion) {
    throw SchemaError("$.schema_version", "unsupported schema version");
  }
  AssertionSuite suite;
  suite.task_id = want_string(j, "task_id", "$");
  if (!j.contains("assertions") || !j.at("assertions").is_array() || j.at("assertions").empty()) {
    throw SchemaError("$.assertions", "expected a non-empty array");
  }
  std::set<std::string> ids;
  const Json& list = j.at("assertions");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string loc = "$.assertions[" + std::to_string(i) + "]";
    Assertion a = parse_assertion(list[i], loc);
    if (!ids.insert(a.id).second) throw SchemaError(loc + ".id", "duplicate id '" + a.id + "'");
    suite.assertions.push_back(std::move(a));
  }
  return suite;
}

Json serialize_suite(const AssertionSuite& suite) {
  Json j;
  j["schema_version"] = kSuiteSchemaVersion;
  j["task_id"] = suite.task_id;
  Json list = Json::array();
  for (const auto& a : suite.assertions) {
    Json o;
    o["id"] = a.id;
    o["kind"] = to_string(a.kind);
    o["path"] = a.path;
    const Params& p = a.params;
    if (p.class_name) o["class"] = *p.class_name;
    if (p.name) o["name"] = *p.name;
    if (!p.attrs.empty()) o["attrs"] = p.attrs;
    if (p.function) o["function"] = *p.function;
    if (p.method) o["method"] = *p.method;
    if (a.kind == AssertionKind::FunctionSignature) {
      Json ps = Json::array();
      for (const auto& spec : p.params) {
        Json s = Json::object();
        if (spec.name) s["name"] = *spec.name;
        if (spec.annotation) s["annotation"] = *spec.annotation;
        ps.push_back(s);
      }
      o["params"] = ps;
    }
    if (p.returns) o["returns"] = *p.returns;
    if (p.callee) o["callee"] = *p.callee;
    if (a.kind == AssertionKind::CallArgMatches) {
      o["arg_index"] = p.arg_index;
      if (p.arg_count) o["arg_count"] = *p.arg_count;
      if (p.matchers.size() == 1) {
        o["matcher"] = matcher_json(p.matchers.front());
      } else {
        Json ms = Json::array();
        for (const auto& m : p.matchers) ms.push_back(matcher_json(m));
        o["matcher"] = ms;
      }
    }
    if (p.keyword) o["keyword"] = *p.keyword;
    if (p.value) o["value"] = matcher_json(*p.value);
    if (p.module) o["module"] = *p.module;
    if (!p.names.empty()) o["names"] = p.names;
    if (p.scope) {
      Json s = Json::object();
      if (p.scope->class_name) s["class"] = *p.scope->class_name;
      if (p.scope->function) s["function"] = *p.scope->function;
      o["scope"] = s;
    }
    if (a.failure_message) o["failure_message"] = *a.failure_message;
    list.push_back(o);
  }
  j["assertions"] = list;
  return j;
}

const FileCache::Entry& FileCache::get(const std::string& relpath) {
  if (auto it = entries_.find(relpath); it != entries_.end()) return it->second;
  Entry e;
  const fs::path full = root_ / relpath;
  e.exists = fs::is_regular_file(full);
  if (e.exists) {
    try {
      e.tree = pytree::parse_source(read_file(full), relpath);
    } catch (const pytree::ParseFailure& f) {
      e.failure = f;
    }
  }
  return entries_.emplace(relpath, std::move(e)).first->second;
}

AssertionOutcome evaluate_assertion(const Assertion& a, FileCache& files) {
  AssertionOutcome out{a.id, Status::Pass, {}};
  const auto& entry = files.get(a.path);
  if (!entry.exists) {
    out.status = Status::Fail;
    out.message = a.path + " does not exist";
    return out;
  }
  if (entry.failure) {
    out.status = Status::Error;
    out.message = "ParseFailure in " + a.path + ": " + entry.failure->what();
    return out;
  }
  if (auto failure = Evaluator(a, *entry.tree).run()) {
    out.status = Status::Fail;
    out.message = std::move(*failure);
  }
  return out;
}

AssertionOutcome evaluate_assertion(const Assertion& a, const fs::path& root) {
  FileCache files(root);
  return evaluate_assertion(a, files);
}

std::vector<AssertionOutcome> run_suite(const AssertionSuite& suite, const fs::path& root) {
  FileCache files(root);
  std::vector<AssertionOutcome> out;
  out.reserve(suite.assertions.size());
  for (const auto& a : suite.assertions) out.push_back(evaluate_assertion(a, files));
  return out;
}

}  // namespace refactorkit::assertlang
