#pragma once

// String normalization shared by parsing, retrieval and scoring: DOI
// canonicalization, title/name folding and edit-distance similarity.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bibmatch {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string trim(std::string_view s) {
    size_t a = 0;
    while (a < s.size() && is_ascii_space(s[a])) ++a;
    size_t b = s.size();
    while (b > a && is_ascii_space(s[b - 1])) --b;
    return std::string(s.substr(a, b - a));
}

inline std::string to_lower_ascii(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

/// A field value counts as absent when it is empty or whitespace-only.
inline bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_space(c); });
}

inline bool field_present(std::string_view s) { return !is_blank(s); }

/// Year from the leading 4-digit run of a string ("2009a" -> 2009);
/// absent when the trimmed string does not start with 4 digits.
inline std::optional<int> parse_year_field(std::string_view raw) {
    std::string s = trim(raw);
    if (s.size() < 4) return std::nullopt;
    int year = 0;
    for (size_t i = 0; i < 4; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        year = year * 10 + (s[i] - '0');
    }
    return year;
}

// ---------------------------------------------------------------------------
// UTF-8
// ---------------------------------------------------------------------------

/// Decodes UTF-8 into codepoints; malformed bytes become U+FFFD.
inline std::vector<uint32_t> utf8_decode(std::string_view s) {
    std::vector<uint32_t> out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        uint32_t cp = 0;
        size_t len = 0;
        if (c < 0x80) {
            cp = c;
            len = 1;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            len = 2;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            len = 3;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07;
            len = 4;
        } else {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(0xFFFD);
            break;
        }
        bool ok = true;
        for (size_t k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, uint32_t cp) {
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

// ---------------------------------------------------------------------------
// Character folding tables
// ---------------------------------------------------------------------------

/// Greek letters (and their common symbol variants) spelled out in ASCII.
/// Returns nullptr when the codepoint is not a known Greek letter.
inline const char* greek_letter_name(uint32_t cp) {
    switch (cp) {
        case 0x0391: case 0x03B1: case 0x0386: case 0x03AC: return "alpha";
        case 0x0392: case 0x03B2: case 0x03D0: return "beta";
        case 0x0393: case 0x03B3: return "gamma";
        case 0x0394: case 0x03B4: return "delta";
        case 0x0395: case 0x03B5: case 0x0388: case 0x03AD: case 0x03F5: return "epsilon";
        case 0x0396: case 0x03B6: return "zeta";
        case 0x0397: case 0x03B7: case 0x0389: case 0x03AE: return "eta";
        case 0x0398: case 0x03B8: case 0x03D1: return "theta";
        case 0x0399: case 0x03B9: case 0x038A: case 0x03AF: case 0x0390: return "iota";
        case 0x039A: case 0x03BA: case 0x03F0: return "kappa";
        case 0x039B: case 0x03BB: return "lambda";
        case 0x039C: case 0x03BC: case 0x00B5: return "mu"; // includes U+00B5 micro sign
        case 0x039D: case 0x03BD: return "nu";
        case 0x039E: case 0x03BE: return "xi";
        case 0x039F: case 0x03BF: case 0x038C: case 0x03CC: return "omicron";
        case 0x03A0: case 0x03C0: case 0x03D6: return "pi";
        case 0x03A1: case 0x03C1: case 0x03F1: return "rho";
        case 0x03A3: case 0x03C3: case 0x03C2: return "sigma"; // final sigma folds too
        case 0x03A4: case 0x03C4: return "tau";
        case 0x03A5: case 0x03C5: case 0x038E: case 0x03CD: case 0x03B0: return "upsilon";
        case 0x03A6: case 0x03C6: case 0x03D5: return "phi";
        case 0x03A7: case 0x03C7: return "chi";
        case 0x03A8: case 0x03C8: return "psi";
        case 0x03A9: case 0x03C9: case 0x038F: case 0x03CE: return "omega";
        default: return nullptr;
    }
}

/// ASCII replacement for Latin-1 Supplement and Latin Extended-A letters
/// (diacritics stripped, ligatures expanded). Returns nullptr when the
/// codepoint is outside the table.
inline const char* latin_fold(uint32_t cp) {
    // Latin-1 Supplement letters.
    static constexpr const char* kLatin1[0x60] = {
        // 0xC0..0xCF
        "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
        // 0xD0..0xDF (0xD7 is the multiplication sign, not a letter)
        "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", "th", "ss",
        // 0xE0..0xEF
        "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
        // 0xF0..0xFF (0xF7 is the division sign)
        "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", "th", "y"};
    if (cp >= 0xC0 && cp <= 0xFF) return kLatin1[cp - 0xC0];
    if (cp < 0x100 || cp > 0x17F) return nullptr;
    // Latin Extended-A, grouped by base letter.
    if (cp <= 0x105) return "a";
    if (cp <= 0x10D) return "c";
    if (cp <= 0x111) return "d";
    if (cp <= 0x11B) return "e";
    if (cp <= 0x123) return "g";
    if (cp <= 0x127) return "h";
    if (cp <= 0x131) return "i";
    if (cp <= 0x133) return "ij";
    if (cp <= 0x135) return "j";
    if (cp <= 0x138) return "k";
    if (cp <= 0x142) return "l";
    if (cp <= 0x14B) return "n";
    if (cp <= 0x151) return "o";
    if (cp <= 0x153) return "oe";
    if (cp <= 0x159) return "r";
    if (cp <= 0x161) return "s";
    if (cp <= 0x167) return "t";
    if (cp <= 0x173) return "u";
    if (cp <= 0x175) return "w";
    if (cp <= 0x178) return "y";
    if (cp <= 0x17E) return "z";
    return "s"; // U+017F long s
}

inline bool is_unicode_space(uint32_t cp) {
    return cp == 0x09 || cp == 0x0A || cp == 0x0B || cp == 0x0C || cp == 0x0D ||
           cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 || cp == 0x2029 ||
           cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// Punctuation and symbol ranges that separate words in titles.
inline bool is_punct_or_symbol(uint32_t cp) {
    if (cp < 0x80) {
        bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                     (cp >= 'A' && cp <= 'Z');
        return !alnum;
    }
    if (cp >= 0xA1 && cp <= 0xBF && cp != 0xB5) return true; // Latin-1 signs, keeps micro
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp >= 0x2000 && cp <= 0x206F) return true; // general punctuation
    if (cp >= 0x20A0 && cp <= 0x20CF) return true; // currency signs
    if (cp == 0x2122 || cp == 0x2212 || cp == 0x2026) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Canonical DOI form: trimmed, lowercase, escaped slashes ("%2F", "\/")
/// unescaped, resolver prefixes stripped. Idempotent.
inline std::string normalize_doi(std::string_view raw) {
    std::string s = to_lower_ascii(trim(raw));
    auto replace_all = [](std::string& str, std::string_view from, std::string_view to) {
        size_t pos = 0;
        while ((pos = str.find(from, pos)) != std::string::npos) {
            str.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(s, "%2f", "/");
    replace_all(s, "\\/", "/");
    bool stripped = true;
    while (stripped) { // resolver prefixes can stack; strip until none is left
        stripped = false;
        s = trim(s);
        for (std::string_view prefix : {"https://doi.org/", "http://doi.org/",
                                        "https://dx.doi.org/", "http://dx.doi.org/"}) {
            if (s.rfind(prefix, 0) == 0) {
                s.erase(0, prefix.size());
                stripped = true;
            }
        }
    }
    return s;
}

/// Title folding applied before any comparison: lowercase, diacritics
/// stripped, Greek letters spelled out, punctuation treated as a word break,
/// whitespace collapsed. Codepoints outside the fold tables (e.g. non-Latin
/// scripts) pass through unchanged. Idempotent.
inline std::string normalize_title(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    auto push = [&](const char* s) {
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out += s;
    };
    for (uint32_t cp : utf8_decode(raw)) {
        if (is_unicode_space(cp)) {
            pending_space = true;
            continue;
        }
        if (const char* name = greek_letter_name(cp)) {
            push(name);
            continue;
        }
        if (const char* folded = latin_fold(cp)) {
            push(folded);
            continue;
        }
        if (is_punct_or_symbol(cp)) {
            pending_space = true;
            continue;
        }
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        } else {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            utf8_append(out, cp);
        }
    }
    return out;
}

/// Surname folding: lowercase, diacritics stripped, whitespace trimmed and
/// collapsed. Punctuation is kept ("o'brien"). Idempotent.
inline std::string normalize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (uint32_t cp : utf8_decode(raw)) {
        if (is_unicode_space(cp)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        if (const char* folded = latin_fold(cp)) {
            out += folded;
        } else if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            out.push_back(c);
        } else {
            utf8_append(out, cp);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

/// Classic edit distance over codepoints, two-row DP.
inline size_t levenshtein(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(utf8_decode(a), utf8_decode(b));
}

/// Normalized similarity 1 - d/max(|a|,|b|) over already-normalized titles.
/// Empty inputs are invalid: an empty title is never scored.
inline double title_similarity(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("title_similarity: empty input");
    auto ca = utf8_decode(a);
    auto cb = utf8_decode(b);
    size_t d = levenshtein(ca, cb);
    size_t m = std::max(ca.size(), cb.size());
    return 1.0 - static_cast<double>(d) / static_cast<double>(m);
}

} // namespace bibmatch
