#include "strings.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace refactorkit::pytree::detail {

StringLiteral split_string_literal(std::string_view text) {
  StringLiteral lit;
  std::size_t i = 0;
  while (i < text.size() && text[i] != '"' && text[i] != '\'') {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    lit.is_raw |= c == 'r';
    lit.is_bytes |= c == 'b';
    lit.is_fstring |= c == 'f';
    ++i;
  }
  const char quote = text[i];
  const bool triple = text.size() - i >= 6 && text[i + 1] == quote && text[i + 2] == quote;
  const std::size_t q = triple ? 3 : 1;
  lit.body = text.substr(i + q, text.size() - i - 2 * q);
  return lit;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

namespace {

unsigned hex_value(std::string_view digits, std::string_view what) {
  unsigned value = 0;
  for (const char c : digits) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("(unicode error) truncated " + std::string(what) + " escape");
    }
    value = value * 16 + static_cast<unsigned>(std::isdigit(static_cast<unsigned char>(c))
                                                   ? c - '0'
                                                   : std::tolower(c) - 'a' + 10);
  }
  return value;
}

}  // namespace

std::string decode_escapes(std::string_view body, bool is_bytes) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (is_bytes && static_cast<unsigned char>(c) >= 0x80) {
      throw std::invalid_argument("bytes can only contain ASCII literal characters");
    }
    if (c != '\\' || i + 1 >= body.size()) {
      out += c;
      continue;
    }
    const char e = body[++i];
    switch (e) {
      case '\n': break;
      case '\r':
        if (i + 1 < body.size() && body[i + 1] == '\n') ++i;
        break;
      case '\\': out += '\\'; break;
      case '\'': out += '\''; break;
      case '"': out += '"'; break;
      case 'a': out += '\a'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      case 'v': out += '\v'; break;
      case 'x': {
        if (i + 2 >= body.size()) {
          throw std::invalid_argument("(value error) invalid \\x escape");
        }
        const unsigned v = hex_value(body.substr(i + 1, 2), "\\xXX");
        i += 2;
        if (is_bytes) {
          out += static_cast<char>(v);
        } else {
          append_utf8(out, v);
        }
        break;
      }
      case 'u':
      case 'U': {
        if (is_bytes) {
          out += '\\';
          out += e;
          break;
        }
        const std::size_t n = e == 'u' ? 4 : 8;
        if (i + n >= body.size()) {
          throw std::invalid_argument("(unicode error) truncated \\" + std::string(1, e) + " escape");
        }
        const unsigned v = hex_value(body.substr(i + 1, n), e == 'u' ? "\\uXXXX" : "\\UXXXXXXXX");
        if (v > 0x10FFFF) throw std::invalid_argument("(unicode error) illegal Unicode character");
        append_utf8(out, v);
        i += n;
        break;
      }
      case 'N': {
        // Named escapes are kept verbatim; no Unicode name table here.
        const std::size_t close = body.find('}', i);
        if (is_bytes || i + 1 >= body.size() || body[i + 1] != '{' || close == std::string_view::npos) {
          if (!is_bytes) throw std::invalid_argument("(unicode error) malformed \\N character escape");
          out += "\\N";
          break;
        }
        out += body.substr(i - 1, close - i + 2);
        i = close;
        break;
      }
      default:
        if (e >= '0' && e <= '7') {
          unsigned v = static_cast<unsigned>(e - '0');
          for (int k = 0; k < 2 && i + 1 < body.size() && body[i + 1] >= '0' && body[i + 1] <= '7'; ++k) {
            v = v * 8 + static_cast<unsigned>(body[++i] - '0');
          }
          if (is_bytes) {
            out += static_cast<char>(v & 0xFF);
          } else {
            append_utf8(out, v);
          }
        } else {
          out += '\\';
          out += e;
        }
    }
  }
  return out;
}

ConstantAttrs parse_number(std::string_view literal) {
  ConstantAttrs c;
  std::string text;
  for (const char ch : literal) {
    if (ch != '_') text += ch;
  }
  c.text = text;
  const char last = static_cast<char>(std::tolower(static_cast<unsigned char>(text.back())));
  if (last == 'j') {
    c.type = ConstantType::Complex;
    return c;
  }
  int base = 10;
  std::string_view digits = text;
  if (text.size() > 1 && text[0] == '0') {
    const char p = static_cast<char>(std::tolower(static_cast<unsigned char>(text[1])));
    if (p == 'x') base = 16;
    if (p == 'o') base = 8;
    if (p == 'b') base = 2;
    if (base != 10) digits.remove_prefix(2);
  }
  const bool is_float = base == 10 && text.find_first_of(".eE") != std::string::npos;
  if (is_float) {
    c.type = ConstantType::Float;
    c.float_value = std::strtod(text.c_str(), nullptr);
    return c;
  }
  c.type = ConstantType::Int;
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
  if (ec == std::errc() && ptr == digits.data() + digits.size()) c.int_value = value;
  return c;
}

}  // namespace refactorkit::pytree::detail
