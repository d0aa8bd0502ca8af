#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "redsys/core/utf8.hpp"

namespace redsys::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::string golden(const std::string& name) { return read_file(std::string(REDSYS_GOLDEN_DIR) + "/" + name); }

// Text with every whitespace character removed.
inline std::u32string strip_whitespace(std::u32string_view text) {
  std::u32string out;
  for (char32_t c : text) {
    if (c != U' ' && c != U'\t' && c != U'\n' && c != U'\r') out += c;
  }
  return out;
}

}  // namespace redsys::testing
