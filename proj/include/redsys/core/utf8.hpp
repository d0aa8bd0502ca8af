#pragma once

#include <string>
#include <string_view>

namespace redsys::utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws DecodeError (offset into
// `bytes`) on malformed input, overlong forms, and surrogates.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view text);

}  // namespace redsys::utf8
