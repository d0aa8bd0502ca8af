#include "redsys/services/lexer.hpp"

#include <vector>

namespace redsys::services {
namespace {

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f'; }

bool is_letter(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || c == U'@' || c == U'*'; }

bool is_special(char32_t c) {
  return is_space(c) || c == U'\\' || c == U'{' || c == U'}' || c == U'$' || c == U'%' || c == U'[' ||
         c == U']';
}

bool is_math_env(std::u32string_view name) {
  return name == U"equation" || name == U"equation*" || name == U"align" || name == U"align*" ||
         name == U"displaymath" || name == U"math" || name == U"gather" || name == U"gather*";
}

enum class Math { kNone, kInline, kDisplay, kBracket, kEnv };

struct Group {
  bool arg;
  bool env_name;  // argument of \begin or \end
  bool is_end;
};

}  // namespace

std::string_view kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::kCommand: return "Command";
    case TokenKind::kBeginGroup: return "BeginGroup";
    case TokenKind::kEndGroup: return "EndGroup";
    case TokenKind::kMathDelim: return "MathDelim";
    case TokenKind::kComment: return "Comment";
    case TokenKind::kWord: return "Word";
    case TokenKind::kWhitespace: return "Whitespace";
  }
  return "";
}

std::vector<StexToken> lex(std::u32string_view text) {
  std::vector<StexToken> out;
  std::vector<Group> groups;
  Math math = Math::kNone;
  bool expect_arg = false;   // the next { or [ starts an argument
  bool in_optional = false;  // inside [...] after a command
  int env_command = 0;       // 1 after \begin, 2 after \end
  std::size_t env_name_begin = 0;

  auto in_arg = [&] {
    if (in_optional) return true;
    for (const auto& g : groups) {
      if (g.arg) return true;
    }
    return false;
  };
  auto push = [&](TokenKind kind, std::size_t b, std::size_t e, bool is_math) {
    out.push_back({kind, b, e, is_math, in_arg()});
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char32_t c = text[i];
    if (c == U'%') {
      std::size_t j = i;
      while (j < n && text[j] != U'\n') ++j;
      push(TokenKind::kComment, i, j, math != Math::kNone);
      i = j;
      continue;
    }
    if (is_space(c)) {
      std::size_t j = i;
      while (j < n && is_space(text[j])) ++j;
      push(TokenKind::kWhitespace, i, j, math != Math::kNone);
      i = j;
      continue;
    }
    if (c == U'\\') {
      std::size_t j = i + 1;
      if (j < n && is_letter(text[j])) {
        while (j < n && is_letter(text[j])) ++j;
      } else if (j < n) {
        ++j;
      }
      const std::u32string_view name = text.substr(i, j - i);
      bool is_math = math != Math::kNone;
      if (name == U"\\[" && math == Math::kNone) {
        math = Math::kBracket;
        is_math = true;
      } else if (name == U"\\]" && math == Math::kBracket) {
        math = Math::kNone;
        is_math = true;
      } else if (name == U"\\end" && math == Math::kEnv) {
        math = Math::kNone;
        is_math = false;
      }
      push(TokenKind::kCommand, i, j, is_math);
      const bool letters = j > i + 1 && is_letter(text[i + 1]);
      expect_arg = letters;
      env_command = name == U"\\begin" ? 1 : name == U"\\end" ? 2 : 0;
      i = j;
      continue;
    }
    if (c == U'{') {
      const bool arg = expect_arg;
      const bool env = arg && env_command != 0;
      groups.push_back({arg, env, env_command == 2});
      push(TokenKind::kBeginGroup, i, i + 1, math != Math::kNone);
      if (env) env_name_begin = i + 1;
      expect_arg = false;
      ++i;
      continue;
    }
    if (c == U'}') {
      push(TokenKind::kEndGroup, i, i + 1, math != Math::kNone);
      if (!groups.empty()) {
        const Group g = groups.back();
        groups.pop_back();
        if (g.env_name) {
          const auto name = text.substr(env_name_begin, i - env_name_begin);
          if (!g.is_end && math == Math::kNone && is_math_env(name)) math = Math::kEnv;
          env_command = 0;
        }
        expect_arg = g.arg && !g.env_name;
      } else {
        expect_arg = false;
      }
      ++i;
      continue;
    }
    if (c == U'[' && expect_arg && !in_optional) {
      in_optional = true;
      push(TokenKind::kWord, i, i + 1, math != Math::kNone);
      ++i;
      continue;
    }
    if (c == U']' && in_optional) {
      push(TokenKind::kWord, i, i + 1, math != Math::kNone);
      in_optional = false;
      expect_arg = true;
      ++i;
      continue;
    }
    if (c == U'$') {
      const bool twice = i + 1 < n && text[i + 1] == U'$';
      const std::size_t j = i + (twice ? 2 : 1);
      if (math == Math::kNone) {
        math = twice ? Math::kDisplay : Math::kInline;
      } else if ((math == Math::kInline && !twice) || (math == Math::kDisplay && twice)) {
        math = Math::kNone;
      } else if (math == Math::kInline && twice) {
        // "$$" closing inline math and opening another: treat as close.
        math = Math::kNone;
      }
      out.push_back({TokenKind::kMathDelim, i, j, true, in_arg()});
      expect_arg = false;
      i = j;
      continue;
    }
    std::size_t j = i;
    while (j < n && !is_special(text[j])) ++j;
    if (j == i) j = i + 1;  // lone [ or ] outside an argument
    push(TokenKind::kWord, i, j, math != Math::kNone);
    expect_arg = false;
    i = j;
  }
  return out;
}

}  // namespace redsys::services
