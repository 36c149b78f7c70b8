#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace offmix {

// Minimal UTF-8 handling, enough for cleaning and transliteration. Invalid
// byte sequences decode as U+FFFD one byte at a time, so every input is
// total.

/// Decodes the code point starting at `pos`, advancing `pos` past it.
char32_t decode_utf8(std::string_view text, size_t& pos);

void append_utf8(std::string& out, char32_t cp);

std::u32string to_utf32(std::string_view text);
std::string to_utf8(const std::u32string& text);

/// True for code points in the Unicode emoji / extended-pictographic
/// ranges, plus variation selectors, ZWJ and keycap combiners. Regional
/// indicators are excluded; they are handled as flag pairs.
bool is_emoji(char32_t cp);

/// U+1F1E6..U+1F1FF, the letters flags are built from.
bool is_regional_indicator(char32_t cp);

/// ASCII punctuation plus the general-punctuation block, fullwidth forms
/// and the Indic danda marks.
bool is_punctuation(char32_t cp);

bool is_whitespace(char32_t cp);

/// Tamil or Malayalam block member.
bool is_native_script(char32_t cp);

}  // namespace offmix
