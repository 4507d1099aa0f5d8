// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vapitest::text {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

/// Case-folded with `_`, `-` and spaces removed. The normal form used by
/// format-equivalence checks and endpoint hint lookups.
inline std::string fold_key(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '_' || c == '-' || c == ' ') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

/// Case-folded alphanumerics only; used to compare endpoint paths ("/climate")
/// against table hints ("Climate").
inline std::string fold_alnum(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

/// Split an identifier into lowercase word tokens. Understands camelCase,
/// snake_case, kebab-case, spaces and digit boundaries.
inline std::vector<std::string> tokenize_key(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c == '_' || c == '-' || c == ' ' || c == '/' || c == '.') {
            flush();
            continue;
        }
        if (std::isupper(c)) {
            // Boundary at lower->Upper and at the end of an acronym run (ABCd).
            bool prev_lower = i > 0 && std::islower(static_cast<unsigned char>(s[i - 1]));
            bool next_lower = i + 1 < s.size() && std::islower(static_cast<unsigned char>(s[i + 1]));
            bool prev_upper = i > 0 && std::isupper(static_cast<unsigned char>(s[i - 1]));
            if (prev_lower || (prev_upper && next_lower)) flush();
        } else if (std::isdigit(c)) {
            bool prev_digit = i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]));
            if (!prev_digit) flush();
        } else if (i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]))) {
            flush();
        }
        cur.push_back(static_cast<char>(std::tolower(c)));
    }
    flush();
    return tokens;
}

/// Levenshtein distance (insert/delete/substitute, unit cost).
inline size_t edit_distance(std::string_view a, std::string_view b) {
    if (a == b) return 0;
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 0; i < a.size(); ++i) {
        cur[0] = i + 1;
        for (size_t j = 0; j < b.size(); ++j) {
            size_t cost = a[i] == b[j] ? 0 : 1;
            cur[j + 1] = std::min({cur[j] + 1, prev[j + 1] + 1, prev[j] + cost});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// True when `needle` is a subsequence of `hay`.
inline bool is_subsequence(std::string_view needle, std::string_view hay) {
    size_t i = 0;
    for (char c : hay) {
        if (i < needle.size() && needle[i] == c) ++i;
    }
    return i == needle.size();
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

/// Shortest round-trip decimal form of a double, locale independent.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

/// FNV-1a 64-bit, hex encoded. Stable across runs and platforms; used to key
/// replay stores.
inline std::string fnv1a_hex(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xF];
        h >>= 4;
    }
    return std::string(buf, 16);
}

}  // namespace vapitest::text
