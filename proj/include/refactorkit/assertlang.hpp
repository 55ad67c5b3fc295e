#pragma once

// Declarative structural assertions over pytree syntax trees. Each kind
// mirrors one family of hand-written AST unit tests; a suite is plain data.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "refactorkit/common.hpp"
#include "refactorkit/pytree.hpp"

namespace refactorkit::assertlang {

inline constexpr std::string_view kSuiteSchemaVersion = "refactorkit.suite/1";

enum class MatcherKind { Any, IsName, IsAttribute, IsConstant };

struct Matcher {
  MatcherKind kind = MatcherKind::Any;
  /// is_name: optional identifier; when absent any Name matches.
  std::optional<std::string> name;
  /// is_attribute: the attribute name (required).
  std::optional<std::string> attr;
  /// is_constant: JSON literal compared against the Constant value.
  std::optional<Json> value;

  bool matches(const pytree::SyntaxNode& node) const;
  friend bool operator==(const Matcher&, const Matcher&) = default;
};

enum class AssertionKind {
  FileExists,
  ClassDefined,
  DefinitionAbsent,
  UsageAbsent,
  SelfAttrAssigned,
  FunctionSignature,
  MethodDefined,
  CallArgMatches,
  CallKeyword,
  ImportsFrom,
  ImportAbsent,
};

std::string_view to_string(AssertionKind kind);
std::optional<AssertionKind> assertion_kind_from_string(std::string_view text);
/// Absence kinds report like assertFalse ("True is not false").
bool is_absence_kind(AssertionKind kind);

struct Scope {
  std::optional<std::string> class_name;
  std::optional<std::string> function;
  friend bool operator==(const Scope&, const Scope&) = default;
};

struct ParamSpec {
  std::optional<std::string> name;
  std::optional<std::string> annotation;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// Union of every kind's parameters; load_suite checks which are mandatory.
struct Params {
  std::optional<std::string> class_name;
  std::optional<std::string> name;
  std::vector<std::string> attrs;
  std::optional<std::string> function;
  std::optional<std::string> method;
  std::vector<ParamSpec> params;
  std::optional<std::string> returns;
  std::optional<std::string> callee;
  std::size_t arg_index = 0;
  std::optional<std::size_t> arg_count;
  /// Any-of; CallArgMatches requires at least one.
  std::vector<Matcher> matchers;
  std::optional<std::string> keyword;
  std::optional<Matcher> value;
  std::optional<std::string> module;
  std::vector<std::string> names;
  std::optional<Scope> scope;
  friend bool operator==(const Params&, const Params&) = default;
};

struct Assertion {
  std::string id;
  AssertionKind kind = AssertionKind::FileExists;
  std::string path;
  Params params;
  /// Template; placeholders {path} {file} {name} {attr} {class} {function}
  /// {method} {module} {callee} {keyword}.
  std::optional<std::string> failure_message;
  friend bool operator==(const Assertion&, const Assertion&) = default;
};

struct AssertionSuite {
  std::string task_id;
  std::vector<Assertion> assertions;
  friend bool operator==(const AssertionSuite&, const AssertionSuite&) = default;
};

enum class Status { Pass, Fail, Error };
std::string_view to_string(Status status);
std::optional<Status> status_from_string(std::string_view text);

struct AssertionOutcome {
  std::string id;
  Status status = Status::Pass;
  std::string message;
  friend bool operator==(const AssertionOutcome&, const AssertionOutcome&) = default;
};

/// Throws SchemaError{location, reason}.
AssertionSuite load_suite(std::string_view document);
AssertionSuite load_suite_json(const Json& document);
Json serialize_suite(const AssertionSuite& suite);

/// Parses each referenced file at most once. Not thread-safe; use one per worker.
class FileCache {
 public:
  explicit FileCache(std::filesystem::path root) : root_(std::move(root)) {}

  struct Entry {
    bool exists = false;
    std::optional<pytree::SyntaxTree> tree;
    std::optional<pytree::ParseFailure> failure;
  };

  const Entry& get(const std::string& relpath);
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::map<std::string, Entry> entries_;
};

AssertionOutcome evaluate_assertion(const Assertion& assertion, FileCache& files);
AssertionOutcome evaluate_assertion(const Assertion& assertion, const std::filesystem::path& root);

/// One outcome per assertion in suite order; never short-circuits.
std::vector<AssertionOutcome> run_suite(const AssertionSuite& suite, const std::filesystem::path& root);

}  // namespace refactorkit::assertlang
