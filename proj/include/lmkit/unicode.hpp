#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lmkit::unicode {

// One decoded UTF-8 unit. Invalid byte sequences are surfaced as a single
// raw byte with valid=false so callers can pass them through untouched.
struct Decoded {
    char32_t cp = 0;
    int len = 1;
    bool valid = false;
};

Decoded decode_at(std::string_view s, std::size_t pos);
std::size_t count_codepoints(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string to_utf8(char32_t cp);

char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);
bool is_space(char32_t cp);
bool is_punct(char32_t cp);

// True when cp lowercases to a distinct character whose uppercase maps back
// to cp. Restricting the case marker to such characters keeps the
// pretransform losslessly invertible.
bool is_case_markable(char32_t cp);

inline bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

}  // namespace lmkit::unicode
