#pragma once

// Transcript normalization applied before any WER computation: Unicode
// punctuation (general category P*) is deleted, letters are lowercased with
// the simple case mapping, and the remainder is split on whitespace runs.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "automode/detail/unicode_tables.hpp"

namespace automode {

using Tokens = std::vector<std::string>;

namespace detail {

template <std::size_t N>
bool in_ranges(char32_t cp, const CodepointRange (&table)[N]) {
    auto it = std::upper_bound(std::begin(table), std::end(table), cp,
                               [](char32_t c, const CodepointRange& r) { return c < r.first; });
    if (it == std::begin(table)) return false;
    --it;
    return cp <= it->last;
}

/// Decodes one UTF-8 sequence starting at `i`, advancing `i`. Invalid bytes
/// decode to U+FFFD and consume a single byte.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        const int c = cont(static_cast<std::size_t>(k));
        if (c < 0) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace detail

inline bool is_punctuation(char32_t cp) { return detail::in_ranges(cp, detail::kPunctuationRanges); }

inline bool is_whitespace(char32_t cp) { return detail::in_ranges(cp, detail::kWhitespaceRanges); }

inline char32_t to_lower(char32_t cp) {
    const auto& map = detail::kLowercaseMap;
    auto it = std::lower_bound(std::begin(map), std::end(map), cp,
                               [](const detail::CaseMapping& m, char32_t c) { return m.from < c; });
    return (it != std::end(map) && it->from == cp) ? it->to : cp;
}

inline Tokens normalize_text(std::string_view raw) {
    Tokens tokens;
    std::string current;
    std::size_t i = 0;
    while (i < raw.size()) {
        const char32_t cp = detail::decode_utf8(raw, i);
        if (is_whitespace(cp)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (!is_punctuation(cp)) {
            detail::append_utf8(current, to_lower(cp));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

inline std::string join_tokens(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace automode
