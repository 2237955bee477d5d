#pragma once

// Token-level scanner for C source. It is deliberately not a C frontend:
// it recognizes just enough lexical structure (comments, literals,
// directives, punctuators) for the structural feature counter to walk.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flagsel/error.hpp"

namespace flagsel {

enum class TokenKind { Identifier, Keyword, Punctuator, Number, StringLiteral, CharLiteral };

inline const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Punctuator: return "punctuator";
    case TokenKind::Number: return "number";
    case TokenKind::StringLiteral: return "string-literal";
    case TokenKind::CharLiteral: return "char-literal";
  }
  return "?";
}

struct Token {
  TokenKind kind;
  std::string lexeme;
  std::uint32_t line;

  bool is(TokenKind k, std::string_view text) const { return kind == k && lexeme == text; }
  bool is_keyword(std::string_view text) const { return is(TokenKind::Keyword, text); }
  bool is_punct(std::string_view text) const { return is(TokenKind::Punctuator, text); }

  friend bool operator==(const Token&, const Token&) = default;
};

using TokenStream = std::vector<Token>;

namespace detail {

inline constexpr std::array<std::string_view, 44> kKeywords = {
    "auto",     "break",    "case",          "char",          "const",        "continue",
    "default",  "do",       "double",        "else",          "enum",         "extern",
    "float",    "for",      "goto",          "if",            "inline",       "int",
    "long",     "register", "restrict",      "return",        "short",        "signed",
    "sizeof",   "static",   "struct",        "switch",        "typedef",      "union",
    "unsigned", "void",     "volatile",      "while",         "_Alignas",     "_Alignof",
    "_Atomic",  "_Bool",    "_Complex",      "_Generic",      "_Imaginary",   "_Noreturn",
    "_Static_assert", "_Thread_local"};

// Longest first within each leading character so max-munch is a linear probe.
inline constexpr std::array<std::string_view, 46> kPunctuators = {
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "*=",  "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "<:",
    ":>",  "<%",  "%>",  "[",  "]",  "(",  ")",  "{",  "}",  ".",  "&",  "*",
    "+",   "-",   "~",   "!",  "/",  "%",  "<",  ">",  "^",  "|"};

inline bool is_keyword(std::string_view word) {
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

inline bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

inline bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  TokenStream run() {
    TokenStream out;
    std::int64_t brace_depth = 0;
    bool line_start = true;

    while (pos_ < src_.size()) {
      const unsigned char c = static_cast<unsigned char>(src_[pos_]);

      if (c == '\n') {
        ++line_;
        ++pos_;
        line_start = true;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        ++pos_;
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        pos_ += 2;
        ++line_;
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        skip_block_comment();
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        skip_line_comment();
        continue;
      }
      if (c == '#' && line_start) {
        skip_directive();
        continue;
      }
      line_start = false;

      if (is_ident_start(c)) {
        const std::uint32_t line = line_;
        std::size_t begin = pos_;
        while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::string_view word = src_.substr(begin, pos_ - begin);
        const char next = peek(0);
        if ((next == '"' || next == '\'') &&
            (word == "L" || word == "u" || word == "U" || word == "u8")) {
          out.push_back(scan_quoted(next, begin, line));
          continue;
        }
        out.push_back({is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier,
                       std::string(word), line});
        continue;
      }
      if (is_digit(c) || (c == '.' && is_digit(static_cast<unsigned char>(peek(1))))) {
        out.push_back(scan_number());
        continue;
      }
      if (c == '"' || c == '\'') {
        out.push_back(scan_quoted(static_cast<char>(c), pos_, line_));
        continue;
      }

      Token punct = scan_punctuator();
      if (punct.lexeme == "{" || punct.lexeme == "<%") {
        ++brace_depth;
        punct.lexeme = "{";
      } else if (punct.lexeme == "}" || punct.lexeme == "%>") {
        if (--brace_depth < 0)
          throw Error(ErrorCode::UnbalancedBraces,
                      "unmatched '}' on line " + std::to_string(punct.line));
        punct.lexeme = "}";
      }
      out.push_back(std::move(punct));
    }

    if (brace_depth != 0)
      throw Error(ErrorCode::UnbalancedBraces,
                  std::to_string(brace_depth) + " unclosed '{' at end of input");
    return out;
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skip_block_comment() {
    const std::uint32_t start = line_;
    pos_ += 2;
    while (pos_ + 1 < src_.size()) {
      if (src_[pos_] == '*' && src_[pos_ + 1] == '/') {
        pos_ += 2;
        return;
      }
      if (src_[pos_] == '\n') ++line_;
      ++pos_;
    }
    throw Error(ErrorCode::UnterminatedComment,
                "block comment opened on line " + std::to_string(start) + " never closes");
  }

  void skip_line_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && peek(1) == '\n') {
        ++line_;
        ++pos_;
      }
      ++pos_;
    }
  }

  // A directive runs to the first newline not preceded by a backslash.
  // Comments inside it are honored so a `/*` cannot leak past the line.
  void skip_directive() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') return;
      if (c == '\\' && peek(1) == '\n') {
        pos_ += 2;
        ++line_;
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        skip_block_comment();
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        skip_line_comment();
        return;
      }
      if (c == '"' || c == '\'') {
        // `#include <it's.h>` or `#error don't` must not fail the scan, so
        // an unterminated quote here just ends at the newline.
        ++pos_;
        while (pos_ < src_.size() && src_[pos_] != c && src_[pos_] != '\n') {
          if (src_[pos_] == '\\' && peek(1) != '\0') {
            if (peek(1) == '\n') ++line_;
            ++pos_;
          }
          ++pos_;
        }
        if (pos_ < src_.size() && src_[pos_] == c) ++pos_;
        continue;
      }
      ++pos_;
    }
  }

  Token scan_quoted(char quote, std::size_t begin, std::uint32_t line) {
    ++pos_;  // opening quote
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\\') {
        if (peek(1) == '\n') ++line_;
        pos_ += 2;
        continue;
      }
      if (c == '\n') break;
      ++pos_;
      if (c == quote) {
        return {quote == '"' ? TokenKind::StringLiteral : TokenKind::CharLiteral,
                std::string(src_.substr(begin, pos_ - begin)), line};
      }
    }
    throw Error(ErrorCode::UnterminatedLiteral,
                std::string(quote == '"' ? "string" : "character") +
                    " literal on line " + std::to_string(line) + " is not terminated");
  }

  // pp-number: digits, letters, '.', '_' and signed exponents.
  Token scan_number() {
    const std::size_t begin = pos_;
    while (pos_ < src_.size()) {
      const unsigned char c = static_cast<unsigned char>(src_[pos_]);
      if ((c == '+' || c == '-') && pos_ > begin) {
        const char prev = src_[pos_ - 1];
        if (prev == 'e' || prev == 'E' || prev == 'p' || prev == 'P') {
          ++pos_;
          continue;
        }
        break;
      }
      if (is_ident_char(c) || c == '.') {
        ++pos_;
        continue;
      }
      break;
    }
    return {TokenKind::Number, std::string(src_.substr(begin, pos_ - begin)), line_};
  }

  Token scan_punctuator() {
    const std::string_view rest = src_.substr(pos_);
    for (auto p : kPunctuators) {
      if (rest.starts_with(p)) {
        pos_ += p.size();
        return {TokenKind::Punctuator, std::string(p), line_};
      }
    }
    // Anything else (',', ';', ':', '?', '=', '#', '@', '`', ...) is a
    // one-character punctuator.
    return {TokenKind::Punctuator, std::string(1, src_[pos_++]), line_};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
};

}  // namespace detail

/// Splits C source into tokens. Comments and the bodies of string and
/// character literals are consumed whole; `#` directive lines produce no
/// tokens at all. Throws `Error` with UnbalancedBraces,
/// UnterminatedComment or UnterminatedLiteral.
inline TokenStream tokenize(std::string_view source) { return detail::Scanner(source).run(); }

}  // namespace flagsel
