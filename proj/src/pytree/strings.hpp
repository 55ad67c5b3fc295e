#pragma once

#include <string>
#include <string_view>

#include "refactorkit/pytree.hpp"

namespace refactorkit::pytree::detail {

struct StringLiteral {
  bool is_raw = false;
  bool is_bytes = false;
  bool is_fstring = false;
  std::string_view body;  // between the quotes
};

StringLiteral split_string_literal(std::string_view token_text);

/// Python escape processing. Throws std::invalid_argument on malformed
/// \x/\u/\U escapes or non-ASCII bytes literals.
std::string decode_escapes(std::string_view body, bool is_bytes);

ConstantAttrs parse_number(std::string_view literal);

void append_utf8(std::string& out, char32_t code_point);

}  // namespace refactorkit::pytree::detail
