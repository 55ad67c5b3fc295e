#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace refactorkit::pytree::detail {

enum class TokenType { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokenType type;
  std::string text;
  int line = 1;
  int column = 1;  // 1-based byte column
  int end_line = 1;
};

/// Produces the logical-line token stream (NEWLINE/INDENT/DEDENT included,
/// comments and non-logical newlines dropped). Throws ParseFailure.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace refactorkit::pytree::detail
