// SPDX-License-Identifier: Apache-2.0
#pragma once

// Rule-based scoring for the five fuzzy key categories plus exact and
// pseudocode, threshold policy per strictness level, and the greedy
// one-to-one assignment used by key and value matching.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapitest/errors.hpp"
#include "vapitest/lexicon.hpp"
#include "vapitest/text.hpp"

namespace vapitest {

enum class Strictness { strict, moderate, relaxed };

inline std::string to_string(Strictness s) {
    switch (s) {
        case Strictness::strict: return "strict";
        case Strictness::moderate: return "moderate";
        case Strictness::relaxed: return "relaxed";
    }
    return "?";
}

inline Strictness strictness_from_string(std::string_view s) {
    if (s == "strict") return Strictness::strict;
    if (s == "moderate") return Strictness::moderate;
    if (s == "relaxed") return Strictness::relaxed;
    throw SchemaError("unknown strictness '" + std::string(s) + "'");
}

inline double threshold(Strictness s) {
    switch (s) {
        case Strictness::strict: return 0.95;
        case Strictness::moderate: return 0.80;
        case Strictness::relaxed: return 0.60;
    }
    return 1.0;
}

enum class MatchCategory {
    exact,
    format,
    spelling,
    abbreviation,
    logical,
    semantic,
    pseudocode,
    none,
};

inline std::string to_string(MatchCategory c) {
    switch (c) {
        case MatchCategory::exact: return "exact";
        case MatchCategory::format: return "format";
        case MatchCategory::spelling: return "spelling";
        case MatchCategory::abbreviation: return "abbreviation";
        case MatchCategory::logical: return "logical";
        case MatchCategory::semantic: return "semantic";
        case MatchCategory::pseudocode: return "pseudocode";
        case MatchCategory::none: return "none";
    }
    return "?";
}

inline MatchCategory category_from_string(std::string_view s) {
    for (auto c : {MatchCategory::exact, MatchCategory::format, MatchCategory::spelling,
                   MatchCategory::abbreviation, MatchCategory::logical,
                   MatchCategory::semantic, MatchCategory::pseudocode, MatchCategory::none})
        if (to_string(c) == s) return c;
    throw SchemaError("unknown match category '" + std::string(s) + "'");
}

/// Rule priority; lower wins when scores tie.
inline int category_priority(MatchCategory c) { return static_cast<int>(c); }

struct Scored {
    MatchCategory category = MatchCategory::none;
    double score = 0.0;
};

namespace match_detail {

inline std::optional<double> abbreviation_score(const std::string& fa, const std::string& fb,
                                                const std::vector<std::string>& ta,
                                                const std::vector<std::string>& tb) {
    const std::string& s = fa.size() <= fb.size() ? fa : fb;
    const std::string& l = fa.size() <= fb.size() ? fb : fa;
    const std::vector<std::string>& lt = fa.size() <= fb.size() ? tb : ta;
    if (s.size() < 2 || s.size() >= l.size()) return std::nullopt;

    bool fires = l.rfind(s, 0) == 0;  // prefix
    if (!fires && lt.size() >= 2 && s.size() == lt.size()) {
        std::string initials;
        for (const auto& t : lt) initials += t.front();
        fires = s == initials;
    }
    if (!fires && s.size() >= 3 && s.front() == l.front() && text::is_subsequence(s, l))
        fires = true;
    if (!fires) return std::nullopt;
    return 0.8 + 0.2 * (static_cast<double>(s.size()) / static_cast<double>(l.size()));
}

/// Rewrites every ["not", t] token pair to [antonym(t)]; unchanged tokens
/// pass through. Returns nullopt when no rewrite applies.
inline std::optional<std::vector<std::string>> negation_rewrite(
    const std::vector<std::string>& tokens, const Lexicons& lex) {
    std::vector<std::string> out;
    bool rewrote = false;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "not" && i + 1 < tokens.size()) {
            if (auto ant = lex.antonym_of(tokens[i + 1])) {
                out.push_back(*ant);
                rewrote = true;
                ++i;
                continue;
            }
        }
        out.push_back(tokens[i]);
    }
    if (!rewrote) return std::nullopt;
    return out;
}

inline bool logical_equivalent(const std::vector<std::string>& ta,
                               const std::vector<std::string>& tb, const Lexicons& lex) {
    if (auto r = negation_rewrite(tb, lex); r && *r == ta) return true;
    if (auto r = negation_rewrite(ta, lex); r && *r == tb) return true;
    return false;
}

inline bool semantic_equivalent(const std::vector<std::string>& ta,
                                const std::vector<std::string>& tb, const Lexicons& lex) {
    if (ta.size() != tb.size() || ta.empty()) return false;
    bool any_synonym = false;
    for (size_t i = 0; i < ta.size(); ++i) {
        if (ta[i] == tb[i]) continue;
        if (!lex.are_synonyms(ta[i], tb[i])) return false;
        any_synonym = true;
    }
    return any_synonym;
}

}  // namespace match_detail

/// Scores one key pair. The first rule that fires in priority order
/// exact > format > spelling > abbreviation > logical > semantic decides the
/// category; (none, 0) when no rule fires.
inline Scored score_keys(std::string_view a, std::string_view b, const Lexicons& lexicons) {
    if (a.empty() || b.empty()) return {};
    if (a == b) return {MatchCategory::exact, 1.0};

    std::string fa = text::fold_key(a), fb = text::fold_key(b);
    if (fa == fb) return {MatchCategory::format, 1.0};

    size_t maxlen = std::max(fa.size(), fb.size());
    size_t dist = text::edit_distance(fa, fb);
    if (dist <= 2 && maxlen >= 6)
        return {MatchCategory::spelling, 1.0 - static_cast<double>(dist) / maxlen};

    auto ta = text::tokenize_key(a), tb = text::tokenize_key(b);
    if (auto s = match_detail::abbreviation_score(fa, fb, ta, tb))
        return {MatchCategory::abbreviation, *s};
    if (match_detail::logical_equivalent(ta, tb, lexicons))
        return {MatchCategory::logical, 1.0};
    if (match_detail::semantic_equivalent(ta, tb, lexicons))
        return {MatchCategory::semantic, 1.0};
    return {};
}

/// Label scoring: key rules plus the boolean state lexicon (TRUE ~ Active).
inline Scored score_labels(std::string_view a, std::string_view b, const Lexicons& lexicons) {
    Scored key_score = score_keys(a, b, lexicons);
    double bs = lexicons.boolean_score(a, b);
    if (bs > key_score.score) return {MatchCategory::logical, bs};
    return key_score;
}

struct AssignedPair {
    size_t left = 0;
    size_t right = 0;
    MatchCategory category = MatchCategory::none;
    double score = 0.0;
};

/// Greedy one-to-one assignment over pairs clearing `min_score`, descending
/// by score, then category priority, then right key, then left key. Greedy
/// order makes the emitted set monotone in the threshold: every pair chosen
/// at a higher threshold is also chosen at a lower one.
template <typename ScoreFn>
inline std::vector<AssignedPair> greedy_assign(const std::vector<std::string>& left,
                                               const std::vector<std::string>& right,
                                               double min_score, ScoreFn&& score_fn) {
    std::vector<AssignedPair> candidates;
    for (size_t i = 0; i < left.size(); ++i) {
        for (size_t j = 0; j < right.size(); ++j) {
            Scored s = score_fn(left[i], right[j]);
            if (s.category != MatchCategory::none && s.score >= min_score)
                candidates.push_back({i, j, s.category, s.score});
        }
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const AssignedPair& x, const AssignedPair& y) {
                  if (x.score != y.score) return x.score > y.score;
                  int px = category_priority(x.category), py = category_priority(y.category);
                  if (px != py) return px < py;
                  if (right[x.right] != right[y.right]) return right[x.right] < right[y.right];
                  return left[x.left] < left[y.left];
              });
    std::vector<bool> left_used(left.size()), right_used(right.size());
    std::vector<AssignedPair> out;
    for (const auto& c : candidates) {
        if (left_used[c.left] || right_used[c.right]) continue;
        left_used[c.left] = true;
        right_used[c.right] = true;
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(),
              [](const AssignedPair& x, const AssignedPair& y) { return x.left < y.left; });
    return out;
}

}  // namespace vapitest
