// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bundled lexicons backing the rule-based matcher: synonym pairs, antonym
// pairs (for negation rewrites like OFF ~ NOT_ON), and boolean state classes
// (TRUE ~ Active ~ ON). All files are two-column 'a|b' text with '#'
// comments; matching is case-insensitive.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "vapitest/errors.hpp"
#include "vapitest/text.hpp"

namespace vapitest {

enum class BoolClass { positive, positive_weak, negative, negative_weak };

struct Lexicons {
    std::set<std::pair<std::string, std::string>> synonyms;  // ordered lowercase pairs
    std::map<std::string, std::string> antonyms;             // both directions
    std::map<std::string, BoolClass> bool_classes;           // lowercase label -> class

    bool are_synonyms(std::string_view a, std::string_view b) const {
        auto la = text::lower(a), lb = text::lower(b);
        if (la > lb) std::swap(la, lb);
        return synonyms.count({la, lb}) > 0;
    }

    std::optional<std::string> antonym_of(std::string_view t) const {
        auto it = antonyms.find(text::lower(t));
        if (it == antonyms.end()) return std::nullopt;
        return it->second;
    }

    std::optional<BoolClass> bool_class_of(std::string_view label) const {
        auto it = bool_classes.find(text::lower(label));
        if (it == bool_classes.end()) return std::nullopt;
        return it->second;
    }

    /// 1.0 for same-class strong pairs (TRUE/Active), 0.7 when a weak state
    /// word of the same polarity is involved (True/Ringing), 0 otherwise.
    double boolean_score(std::string_view a, std::string_view b) const {
        auto ca = bool_class_of(a), cb = bool_class_of(b);
        if (!ca || !cb) return 0.0;
        bool pos_a = *ca == BoolClass::positive || *ca == BoolClass::positive_weak;
        bool pos_b = *cb == BoolClass::positive || *cb == BoolClass::positive_weak;
        if (pos_a != pos_b) return 0.0;
        bool weak = *ca == BoolClass::positive_weak || *ca == BoolClass::negative_weak ||
                    *cb == BoolClass::positive_weak || *cb == BoolClass::negative_weak;
        return weak ? 0.7 : 1.0;
    }

    void add_synonym(std::string_view a, std::string_view b) {
        auto la = text::lower(a), lb = text::lower(b);
        if (la > lb) std::swap(la, lb);
        synonyms.insert({la, lb});
    }

    void add_antonym(std::string_view a, std::string_view b) {
        antonyms[text::lower(a)] = text::lower(b);
        antonyms[text::lower(b)] = text::lower(a);
    }

    void add_bool(std::string_view label, BoolClass cls) {
        bool_classes[text::lower(label)] = cls;
    }

    void load_synonyms(std::string_view two_column) {
        for_each_pair(two_column, [&](std::string_view a, std::string_view b) {
            add_synonym(a, b);
        });
    }

    void load_antonyms(std::string_view two_column) {
        for_each_pair(two_column, [&](std::string_view a, std::string_view b) {
            add_antonym(a, b);
        });
    }

    void load_boolean(std::string_view two_column) {
        for_each_pair(two_column, [&](std::string_view label, std::string_view cls) {
            auto c = text::lower(cls);
            if (c == "true")
                add_bool(label, BoolClass::positive);
            else if (c == "false")
                add_bool(label, BoolClass::negative);
            else if (c == "true_like")
                add_bool(label, BoolClass::positive_weak);
            else if (c == "false_like")
                add_bool(label, BoolClass::negative_weak);
            else
                throw SyntaxError("boolean lexicon: unknown class '" + std::string(cls) + "'");
        });
    }

    static const Lexicons& builtin() {
        static Lexicons lex = [] {
            Lexicons l;
            l.load_synonyms(builtin_synonyms());
            l.load_antonyms(builtin_antonyms());
            l.load_boolean(builtin_boolean());
            return l;
        }();
        return lex;
    }

    static std::string_view builtin_synonyms() {
        return
            "# synonym pairs\n"
            "start|launch\n"
            "speed|velocity\n"
            "auto|automatic\n"
            "target|desired\n"
            "cabin|interior\n"
            "rest|break\n"
            "current|present\n"
            "lamp|light\n"
            "stop|halt\n"
            "route|path\n"
            "alarm|alert\n"
            "mode|profile\n";
    }

    static std::string_view builtin_antonyms() {
        return
            "# antonym pairs, used for negation rewrites (OFF ~ NOT_ON)\n"
            "on|off\n"
            "open|closed\n"
            "locked|unlocked\n"
            "enabled|disabled\n"
            "active|inactive\n"
            "high|low\n"
            "up|down\n";
    }

    static std::string_view builtin_boolean() {
        return
            "# label|class, class in {true, false, true_like, false_like}\n"
            "true|true\n"
            "on|true\n"
            "active|true\n"
            "enabled|true\n"
            "yes|true\n"
            "set|true\n"
            "false|false\n"
            "off|false\n"
            "inactive|false\n"
            "disabled|false\n"
            "no|false\n"
            "unset|false\n"
            "ringing|true_like\n"
            "snoozed|true_like\n"
            "armed|true_like\n"
            "triggered|true_like\n"
            "engaged|true_like\n"
            "idle|false_like\n"
            "standby|false_like\n"
            "dormant|false_like\n"
            "released|false_like\n";
    }

private:
    template <typename F>
    static void for_each_pair(std::string_view doc, F&& f) {
        size_t line_no = 0;
        for (const auto& raw : text::split(doc, '\n')) {
            ++line_no;
            auto line = text::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            auto bar = line.find('|');
            if (bar == std::string_view::npos)
                throw SyntaxError("lexicon: expected 'a|b' on line " + std::to_string(line_no));
            auto a = text::trim(line.substr(0, bar));
            auto b = text::trim(line.substr(bar + 1));
            if (a.empty() || b.empty())
                throw SyntaxError("lexicon: empty column on line " + std::to_string(line_no));
            f(a, b);
        }
    }
};

}  // namespace vapitest
