#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tempovec {

// Rule-based tokenizer: tokens are maximal runs of alphabetic codepoints,
// allowing apostrophes and hyphens strictly between letters ("l'operazione",
// "week-end"). Digits and punctuation are dropped. Output is lowercased.
//
// Letter coverage: ASCII, Latin-1 Supplement, Latin Extended-A/B, Greek,
// Cyrillic. Lowercase mapping is implemented for ASCII, Latin-1, Latin
// Extended-A, Greek and Cyrillic; other letters pass through unchanged.

namespace detail {

inline uint32_t lowercase_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;  // À..Þ
    if (cp >= 0x0100 && cp <= 0x0137) return (cp | 1u);                  // paired Ā..ķ
    if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0177) return (cp | 1u);
    if (cp == 0x0178) return 0x00FF;                                     // Ÿ -> ÿ
    if (cp >= 0x0179 && cp <= 0x017E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x017F) return 0x0073;                                     // long s -> s
    if (cp >= 0x0391 && cp <= 0x03AB && cp != 0x03A2) return cp + 0x20;  // Greek
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;                  // Cyrillic
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
    return cp;
}

inline bool is_letter_cp(uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp >= 0x00C0 && cp <= 0x00FF) return cp != 0x00D7 && cp != 0x00F7;
    if (cp >= 0x0100 && cp <= 0x024F) return true;   // Latin Extended-A/B
    if (cp >= 0x0386 && cp <= 0x03FF) return cp != 0x0387;  // Greek
    if (cp >= 0x0400 && cp <= 0x04FF) return true;   // Cyrillic
    return false;
}

// Apostrophe variants are normalized to U+0027 so vocabulary entries do not
// split on quote style.
inline bool is_apostrophe_cp(uint32_t cp) { return cp == 0x0027 || cp == 0x2019 || cp == 0x02BC; }

// Decodes one UTF-8 codepoint at pos; advances pos. Returns 0xFFFD on
// malformed input (consuming a single byte so scanning always progresses).
inline uint32_t decode_utf8(std::string_view s, size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++pos; return 0xFFFD; }
    if (pos + static_cast<size_t>(len) > s.size()) { ++pos; return 0xFFFD; }
    for (int i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + static_cast<size_t>(i)]);
        if ((b & 0xC0) != 0x80) { ++pos; return 0xFFFD; }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += static_cast<size_t>(len);
    return cp;
}

inline void encode_utf8(uint32_t cp, std::string& out) {
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

template <typename Sink>
void tokenize_into(std::string_view text, Sink&& sink) {
    using namespace detail;
    std::string cur;
    size_t pos = 0;
    bool prev_letter = false;
    size_t pending_joiner = 0;  // bytes of cur occupied before a trailing '/-
    while (pos < text.size()) {
        const uint32_t cp = decode_utf8(text, pos);
        if (is_letter_cp(cp)) {
            encode_utf8(lowercase_cp(cp), cur);
            prev_letter = true;
            pending_joiner = 0;
            continue;
        }
        if ((is_apostrophe_cp(cp) || cp == '-') && prev_letter) {
            // Keep only if the next codepoint is a letter; remember where to
            // cut if it is not.
            pending_joiner = cur.size();
            cur.push_back(is_apostrophe_cp(cp) ? '\'' : '-');
            prev_letter = false;
            continue;
        }
        if (pending_joiner) cur.resize(pending_joiner);
        if (!cur.empty()) sink(cur);
        cur.clear();
        prev_letter = false;
        pending_joiner = 0;
    }
    if (pending_joiner) cur.resize(pending_joiner);
    if (!cur.empty()) sink(cur);
}

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    tokenize_into(text, [&](const std::string& tok) { out.push_back(tok); });
    return out;
}

}  // namespace tempovec
