#include "lmkit/unicode.hpp"

#include <clocale>
#include <cwctype>
#include <locale.h>

namespace lmkit::unicode {

namespace {

locale_t utf8_locale() {
    static locale_t loc = [] {
        locale_t l = newlocale(LC_ALL_MASK, "C.UTF-8", (locale_t)0);
        if (!l) l = newlocale(LC_ALL_MASK, "en_US.UTF-8", (locale_t)0);
        if (!l) l = newlocale(LC_ALL_MASK, "", (locale_t)0);
        return l;
    }();
    return loc;
}

}  // namespace

Decoded decode_at(std::string_view s, std::size_t pos) {
    Decoded d;
    unsigned char c0 = static_cast<unsigned char>(s[pos]);
    std::size_t remain = s.size() - pos;
    auto cont = [&](std::size_t k) {
        return k < remain && (static_cast<unsigned char>(s[pos + k]) & 0xC0) == 0x80;
    };
    if (c0 < 0x80) {
        d.cp = c0;
        d.len = 1;
        d.valid = true;
    } else if ((c0 & 0xE0) == 0xC0 && cont(1)) {
        d.cp = (char32_t(c0 & 0x1F) << 6) | (s[pos + 1] & 0x3F);
        d.len = 2;
        d.valid = d.cp >= 0x80;
    } else if ((c0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        d.cp = (char32_t(c0 & 0x0F) << 12) | (char32_t(s[pos + 1] & 0x3F) << 6) |
               (s[pos + 2] & 0x3F);
        d.len = 3;
        d.valid = d.cp >= 0x800 && !(d.cp >= 0xD800 && d.cp <= 0xDFFF);
    } else if ((c0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        d.cp = (char32_t(c0 & 0x07) << 18) | (char32_t(s[pos + 1] & 0x3F) << 12) |
               (char32_t(s[pos + 2] & 0x3F) << 6) | (s[pos + 3] & 0x3F);
        d.len = 4;
        d.valid = d.cp >= 0x10000 && d.cp <= 0x10FFFF;
    }
    if (!d.valid) {
        d.cp = c0;
        d.len = 1;
    }
    return d;
}

std::size_t count_codepoints(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size();) {
        i += static_cast<std::size_t>(decode_at(s, i).len);
        ++n;
    }
    return n;
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

std::string to_utf8(char32_t cp) {
    std::string s;
    append_utf8(s, cp);
    return s;
}

char32_t to_lower(char32_t cp) {
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), utf8_locale()));
}

char32_t to_upper(char32_t cp) {
    return static_cast<char32_t>(towupper_l(static_cast<wint_t>(cp), utf8_locale()));
}

bool is_space(char32_t cp) {
    return iswspace_l(static_cast<wint_t>(cp), utf8_locale()) != 0;
}

bool is_punct(char32_t cp) {
    return iswpunct_l(static_cast<wint_t>(cp), utf8_locale()) != 0;
}

bool is_case_markable(char32_t cp) {
    char32_t lo = to_lower(cp);
    return lo != cp && to_upper(lo) == cp;
}

}  // namespace lmkit::unicode
