#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bident::text {

// Unicode NFC normalization of UTF-8 text. Case is preserved.
std::string nfc(std::string_view utf8);

std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);

// Splits on ASCII whitespace; empty tokens are never produced.
std::vector<std::string_view> whitespace_tokens(std::string_view s);

// Decodes UTF-8 to code points. Ill-formed sequences decode to U+FFFD.
std::u32string code_points(std::string_view utf8);

std::string stem(std::string_view path);

}  // namespace bident::text
