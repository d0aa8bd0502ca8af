#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace redsys::services {

enum class TokenKind { kCommand, kBeginGroup, kEndGroup, kMathDelim, kComment, kWord, kWhitespace };

std::string_view kind_name(TokenKind kind);

struct StexToken {
  TokenKind kind;
  std::size_t begin;
  std::size_t end;
  bool math = false;  // inside $...$, $$...$$, \[...\] or a math environment
  bool arg = false;   // inside a command argument ({...} or [...] after a command)

  bool operator==(const StexToken&) const = default;
};

// Tokens tile `text` exactly. The lexer is a character-level state machine:
// `%` comments run to the end of the line, `\name` and `\x` are commands,
// braces are counted, `$` toggles inline math and `$$` display math, and
// groups or brackets directly after a command (or after another argument)
// are argument context. Unterminated constructs extend to the end.
std::vector<StexToken> lex(std::u32string_view text);

}  // namespace redsys::services
