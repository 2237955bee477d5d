#include <gtest/gtest.h>

#include "flagsel/lexer.hpp"

using namespace flagsel;

namespace {

std::size_t count_keyword(const TokenStream& ts, std::string_view kw) {
  std::size_t n = 0;
  for (const auto& t : ts) n += t.is_keyword(kw) ? 1 : 0;
  return n;
}

Token tok(TokenKind k, std::string lexeme, std::uint32_t line) { return Token{k, std::move(lexeme), line}; }

ErrorCode error_of(std::string_view src) {
  try {
    tokenize(src);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << src;
  return ErrorCode::InvariantViolation;
}

}  // namespace

TEST(Lexer, LineCommentHidesKeyword) {
  const auto ts = tokenize("int x; // for\n");
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_TRUE(ts[0].is_keyword("int"));
  EXPECT_EQ(ts[1].kind, TokenKind::Identifier);
  EXPECT_EQ(ts[1].lexeme, "x");
  EXPECT_TRUE(ts[2].is_punct(";"));
  EXPECT_EQ(count_keyword(ts, "for"), 0u);
}

TEST(Lexer, WhileOne) {
  const TokenStream expected{
      tok(TokenKind::Keyword, "while", 1),   tok(TokenKind::Punctuator, "(", 1), tok(TokenKind::Number, "1", 1),
      tok(TokenKind::Punctuator, ")", 1),    tok(TokenKind::Punctuator, "{", 1), tok(TokenKind::Punctuator, "}", 1),
  };
  EXPECT_EQ(tokenize("while(1){}"), expected);
}

// Reference list below was written out by hand, token by token.
TEST(Lexer, TwelveLineSnippetWithForInString) {
  const char* src =
      "#include <stdio.h>\n"                 // 1
      "/* for loops: none here\n"            // 2
      "   while (1) {} */\n"                 // 3
      "int main(void) {\n"                   // 4
      "  const char *s = \"for (;;)\";\n"    // 5
      "  char c = 'f';\n"                    // 6
      "  // for (i = 0; i < n; ++i)\n"       // 7
      "  if (s[0] == c) {\n"                 // 8
      "    puts(\"for\\\"while\");\n"        // 9
      "  }\n"                                // 10
      "  return 0x1F;\n"                     // 11
      "}\n";                                 // 12
  using K = TokenKind;
  const TokenStream expected{
      tok(K::Keyword, "int", 4),        tok(K::Identifier, "main", 4),  tok(K::Punctuator, "(", 4),
      tok(K::Keyword, "void", 4),       tok(K::Punctuator, ")", 4),     tok(K::Punctuator, "{", 4),
      tok(K::Keyword, "const", 5),      tok(K::Keyword, "char", 5),     tok(K::Punctuator, "*", 5),
      tok(K::Identifier, "s", 5),       tok(K::Punctuator, "=", 5),     tok(K::StringLiteral, "\"for (;;)\"", 5),
      tok(K::Punctuator, ";", 5),       tok(K::Keyword, "char", 6),     tok(K::Identifier, "c", 6),
      tok(K::Punctuator, "=", 6),       tok(K::CharLiteral, "'f'", 6),  tok(K::Punctuator, ";", 6),
      tok(K::Keyword, "if", 8),         tok(K::Punctuator, "(", 8),     tok(K::Identifier, "s", 8),
      tok(K::Punctuator, "[", 8),       tok(K::Number, "0", 8),         tok(K::Punctuator, "]", 8),
      tok(K::Punctuator, "==", 8),      tok(K::Identifier, "c", 8),     tok(K::Punctuator, ")", 8),
      tok(K::Punctuator, "{", 8),       tok(K::Identifier, "puts", 9),  tok(K::Punctuator, "(", 9),
      tok(K::StringLiteral, "\"for\\\"while\"", 9),                     tok(K::Punctuator, ")", 9),
      tok(K::Punctuator, ";", 9),       tok(K::Punctuator, "}", 10),    tok(K::Keyword, "return", 11),
      tok(K::Number, "0x1F", 11),       tok(K::Punctuator, ";", 11),    tok(K::Punctuator, "}", 12),
  };
  const auto ts = tokenize(src);
  EXPECT_EQ(count_keyword(ts, "for"), 0u);
  EXPECT_EQ(count_keyword(ts, "while"), 0u);
  ASSERT_EQ(ts.size(), expected.size());
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(ts[i], expected[i]) << "token " << i << " '" << ts[i].lexeme << "'";
}

TEST(Lexer, MaxMunchPunctuators) {
  const auto ts = tokenize("a<<=b->c...d++ + ++e");
  std::vector<std::string> lex;
  for (const auto& t : ts) lex.push_back(t.lexeme);
  EXPECT_EQ(lex, (std::vector<std::string>{"a", "<<=", "b", "->", "c", "...", "d", "++", "+", "++", "e"}));
}

TEST(Lexer, DirectiveWithContinuationIsOpaque) {
  const auto ts = tokenize("#define LOOP \\\n  for(;;) {\nint y;");
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_TRUE(ts[0].is_keyword("int"));
  EXPECT_EQ(ts[0].line, 3u);
}

TEST(Lexer, DirectiveWithStrayQuote) {
  EXPECT_NO_THROW(tokenize("#include <it's.h>\nint x;"));
}

TEST(Lexer, LiteralPrefixesAndEscapes) {
  const auto ts = tokenize("L\"w\" u8\"x\" '\\'' U'\\n'");
  ASSERT_EQ(ts.size(), 4u);
  EXPECT_EQ(ts[0].kind, TokenKind::StringLiteral);
  EXPECT_EQ(ts[1].kind, TokenKind::StringLiteral);
  EXPECT_EQ(ts[2].kind, TokenKind::CharLiteral);
  EXPECT_EQ(ts[3].kind, TokenKind::CharLiteral);
}

TEST(Lexer, Numbers) {
  const auto ts = tokenize("1.5e-3 0x1fUL .5 10u");
  ASSERT_EQ(ts.size(), 4u);
  for (const auto& t : ts) EXPECT_EQ(t.kind, TokenKind::Number) << t.lexeme;
  EXPECT_EQ(ts[0].lexeme, "1.5e-3");
}

TEST(Lexer, CommentsAcrossLinesKeepLineNumbers) {
  const auto ts = tokenize("/* a\nb\nc */ x\n// y\nz");
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].line, 3u);
  EXPECT_EQ(ts[1].line, 5u);
}

TEST(Lexer, Errors) {
  EXPECT_EQ(error_of("int f() {"), ErrorCode::UnbalancedBraces);
  EXPECT_EQ(error_of("}"), ErrorCode::UnbalancedBraces);
  EXPECT_EQ(error_of("/* open"), ErrorCode::UnterminatedComment);
  EXPECT_EQ(error_of("char *s = \"abc;\n"), ErrorCode::UnterminatedLiteral);
  EXPECT_EQ(error_of("x = 'a"), ErrorCode::UnterminatedLiteral);
}

TEST(Lexer, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Lexer, BracesBalancedOnAcceptance) {
  const auto ts = tokenize("struct s { int a; }; void f() { { } }");
  long depth = 0;
  for (const auto& t : ts) {
    if (t.is_punct("{")) ++depth;
    if (t.is_punct("}")) --depth;
    ASSERT_GE(depth, 0);
  }
  EXPECT_EQ(depth, 0);
}
