#include "tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "refactorkit/pytree.hpp"

namespace refactorkit::pytree::detail {
namespace {

constexpr std::array kKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await",
    "break", "class",  "continue", "def",     "del",    "elif",   "else",  "except",
    "finally", "for",  "from",    "global",   "if",     "import", "in",    "is",
    "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
    "while", "with",   "yield",
};

// Longest first so that greedy matching works.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**",
    "//",  "<<",  ">>",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ";",  ".",  "+",  "-",
    "*",   "/",   "%",   "&",   "|",   "^",  "~",  "<",  ">",  "=",  "@",
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view word) {
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

char closer_for(char open) {
  switch (open) {
    case '(': return ')';
    case '[': return ']';
    default: return '}';
  }
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (true) {
      if (at_line_start_ && brackets_.empty()) {
        if (!handle_indentation()) break;
      }
      if (pos_ >= src_.size()) break;
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else if (c == '\\') {
        line_continuation();
      } else if (c == '\n' || c == '\r') {
        end_of_line();
      } else if (is_ident_start(static_cast<unsigned char>(c))) {
        identifier_or_string();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        number();
      } else if (c == '"' || c == '\'') {
        string(pos_);
      } else {
        op();
      }
    }
    finish();
    return std::move(out_);
  }

 private:
  int column() const { return static_cast<int>(pos_ - line_begin_) + 1; }

  [[noreturn]] void fail(const std::string& message) const { fail_at(line_, column(), message); }
  [[noreturn]] static void fail_at(int line, int col, const std::string& message) {
    throw ParseFailure(line, col, message);
  }

  void newline_consumed(std::size_t next_pos) {
    pos_ = next_pos;
    ++line_;
    line_begin_ = pos_;
  }

  // Consumes "\n", "\r\n" or "\r" at pos_.
  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
      newline_consumed(pos_ + 2);
    } else {
      newline_consumed(pos_ + 1);
    }
  }

  void emit(TokenType type, std::string text, int line, int col, int end_line) {
    out_.push_back(Token{type, std::move(text), line, col, end_line});
  }

  // Returns false at end of input.
  bool handle_indentation() {
    while (true) {
      int width = 0;
      while (pos_ < src_.size()) {
        const char c = src_[pos_];
        if (c == ' ') {
          ++width;
        } else if (c == '\t') {
          width = (width / 8 + 1) * 8;
        } else if (c == '\f') {
          width = 0;
        } else {
          break;
        }
        ++pos_;
      }
      if (pos_ >= src_.size()) return false;
      const char c = src_[pos_];
      if (c == '#') {
        skip_comment();
        if (pos_ >= src_.size()) return false;
      }
      if (src_[pos_] == '\n' || src_[pos_] == '\r') {
        consume_newline();
        continue;
      }
      at_line_start_ = false;
      if (width > indents_.back()) {
        indents_.push_back(width);
        emit(TokenType::Indent, "", line_, column(), line_);
      } else {
        while (width < indents_.back()) {
          indents_.pop_back();
          emit(TokenType::Dedent, "", line_, column(), line_);
        }
        if (width != indents_.back()) {
          fail("unindent does not match any outer indentation level");
        }
      }
      return true;
    }
  }

  void skip_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
  }

  void line_continuation() {
    const std::size_t next = pos_ + 1;
    if (next < src_.size() && (src_[next] == '\n' || src_[next] == '\r')) {
      pos_ = next;
      consume_newline();
      if (pos_ >= src_.size()) fail("unexpected EOF while parsing");
      return;
    }
    fail("unexpected character after line continuation character");
  }

  void end_of_line() {
    if (brackets_.empty()) {
      if (!out_.empty() && out_.back().type != TokenType::Newline &&
          out_.back().type != TokenType::Indent && out_.back().type != TokenType::Dedent) {
        emit(TokenType::Newline, "", line_, column(), line_);
      }
      at_line_start_ = true;
    }
    consume_newline();
  }

  void identifier_or_string() {
    const std::size_t start = pos_;
    const int col = column();
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
        is_string_prefix(word)) {
      pos_ = start;
      string(start);
      return;
    }
    emit(TokenType::Name, std::string(word), line_, col, line_);
  }

  void digits(bool (*accept)(unsigned char)) {
    bool last_underscore = false;
    while (pos_ < src_.size()) {
      const auto c = static_cast<unsigned char>(src_[pos_]);
      if (c == '_') {
        if (last_underscore) fail("invalid decimal literal");
        last_underscore = true;
      } else if (accept(c)) {
        last_underscore = false;
      } else {
        break;
      }
      ++pos_;
    }
    if (last_underscore) fail("invalid decimal literal");
  }

  void number() {
    const std::size_t start = pos_;
    const int col = column();
    auto dec = [](unsigned char c) { return std::isdigit(c) != 0; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      const char base = static_cast<char>(std::tolower(src_[pos_ + 1]));
      pos_ += 2;
      const std::size_t body = pos_;
      if (pos_ < src_.size() && src_[pos_] == '_') ++pos_;
      if (base == 'x') {
        digits([](unsigned char c) { return std::isxdigit(c) != 0; });
      } else if (base == 'o') {
        digits([](unsigned char c) { return c >= '0' && c <= '7'; });
      } else {
        digits([](unsigned char c) { return c == '0' || c == '1'; });
      }
      if (pos_ == body) fail("invalid " + std::string(base == 'x'   ? "hexadecimal"
                                                      : base == 'o' ? "octal"
                                                                    : "binary") +
                             " literal");
    } else {
      digits(dec);
      if (pos_ < src_.size() && src_[pos_] == '.') {
        ++pos_;
        if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          digits(dec);
        }
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
        if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
          pos_ = p;
          digits(dec);
        } else {
          fail("invalid decimal literal");
        }
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
      const std::string_view lit = src_.substr(start, pos_ - start);
      if (lit.size() > 1 && lit[0] == '0' && lit.find_first_of(".eEjJ") == std::string_view::npos &&
          lit.find_first_not_of("0_") != std::string_view::npos) {
        fail_at(line_, col, "leading zeros in decimal integer literals are not permitted");
      }
    }
    if (pos_ < src_.size() && is_ident_start(static_cast<unsigned char>(src_[pos_]))) {
      // `1if x else 2` is still legal; anything else glued to a number is not.
      const std::string_view rest = src_.substr(pos_);
      const bool keyword_follows = rest.starts_with("if") || rest.starts_with("else") ||
                                   rest.starts_with("and") || rest.starts_with("or") ||
                                   rest.starts_with("in") || rest.starts_with("is") ||
                                   rest.starts_with("not") || rest.starts_with("for");
      if (!keyword_follows) fail("invalid decimal literal");
    }
    emit(TokenType::Number, std::string(src_.substr(start, pos_ - start)), line_, col, line_);
  }

  void string(std::size_t start) {
    const int start_line = line_;
    const int col = column();
    while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\'') ++pos_;
    const char quote = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) {
        fail_at(start_line, col,
                triple ? "unterminated triple-quoted string literal" : "unterminated string literal");
      }
      const char c = src_[pos_];
      if (c == '\\') {
        ++pos_;
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n' || src_[pos_] == '\r') {
            consume_newline();
          } else {
            ++pos_;
          }
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) fail_at(start_line, col, "unterminated string literal");
        consume_newline();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(TokenType::String, std::string(src_.substr(start, pos_ - start)), start_line, col, line_);
  }

  void op() {
    const std::string_view rest = src_.substr(pos_);
    for (const std::string_view candidate : kOperators) {
      if (!rest.starts_with(candidate)) continue;
      const int col = column();
      if (candidate.size() == 1) {
        const char c = candidate[0];
        if (c == '(' || c == '[' || c == '{') {
          brackets_.push_back({c, line_, col});
        } else if (c == ')' || c == ']' || c == '}') {
          if (brackets_.empty()) fail(std::string("unmatched '") + c + "'");
          const Bracket open = brackets_.back();
          if (closer_for(open.ch) != c) {
            fail(std::string("closing parenthesis '") + c +
                 "' does not match opening parenthesis '" + open.ch + "'");
          }
          brackets_.pop_back();
        }
      }
      emit(TokenType::Op, std::string(candidate), line_, col, line_);
      pos_ += candidate.size();
      return;
    }
    if (rest.starts_with("!")) fail("invalid syntax");
    fail(std::string("invalid character '") + src_[pos_] + "'");
  }

  void finish() {
    if (!brackets_.empty()) {
      const Bracket& open = brackets_.back();
      fail_at(open.line, open.column, std::string("'") + open.ch + "' was never closed");
    }
    if (!out_.empty() && out_.back().type != TokenType::Newline &&
        out_.back().type != TokenType::Dedent && out_.back().type != TokenType::Indent) {
      emit(TokenType::Newline, "", line_, column(), line_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenType::Dedent, "", line_, column(), line_);
    }
    emit(TokenType::EndMarker, "", line_, column(), line_);
  }

  struct Bracket {
    char ch;
    int line;
    int column;
  };

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::size_t line_begin_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<Bracket> brackets_;
  std::vector<Token> out_;
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view source) { return Tokenizer(source).run(); }

}  // namespace refactorkit::pytree::detail
