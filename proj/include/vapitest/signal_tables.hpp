// SPDX-License-Identifier: Apache-2.0
#pragma once

// CAN signal table and Virtual Vehicle table: a delimited-record text format,
// one row per line:
//
//   CAN: key | endpoint_hint | unit | encoding | pseudocode
//   VV:  key | bound_can_key | unit | encoding
//
// with encodings as LABEL=INT;LABEL=INT, '#' comment lines, empty fields for
// absent values. Pseudocode cells hold informal OR-chains: "Key:Label OR
// Key:Label".

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapitest/errors.hpp"
#include "vapitest/text.hpp"

namespace vapitest {

/// Label -> raw value pairs in row order.
struct Encoding {
    std::vector<std::pair<std::string, int64_t>> entries;

    bool operator==(const Encoding&) const = default;
    bool empty() const { return entries.empty(); }

    std::optional<int64_t> raw_of(std::string_view label) const {
        for (const auto& [l, r] : entries)
            if (l == label) return r;
        return std::nullopt;
    }
    std::optional<std::string> label_of(int64_t raw) const {
        for (const auto& [l, r] : entries)
            if (r == raw) return l;
        return std::nullopt;
    }
    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto& [l, r] : entries) out.push_back(l);
        return out;
    }
};

struct CanSignal {
    std::string key;
    std::string endpoint_hint;
    std::optional<std::string> unit_text;
    Encoding encoding;
    std::optional<std::string> pseudocode;

    bool operator==(const CanSignal&) const = default;
};

struct VvEntry {
    std::string key;
    std::optional<std::string> bound_can_key;
    std::optional<std::string> unit_text;
    Encoding encoding;

    bool operator==(const VvEntry&) const = default;
};

struct CanTable {
    std::vector<CanSignal> signals;

    bool operator==(const CanTable&) const = default;

    const CanSignal* find(std::string_view key) const {
        for (const auto& s : signals)
            if (s.key == key) return &s;
        return nullptr;
    }
};

struct VvTable {
    std::vector<VvEntry> entries;

    bool operator==(const VvTable&) const = default;

    const VvEntry* find(std::string_view key) const {
        for (const auto& e : entries)
            if (e.key == key) return &e;
        return nullptr;
    }
    const VvEntry* find_bound_to(std::string_view can_key) const {
        for (const auto& e : entries)
            if (e.bound_can_key && *e.bound_can_key == can_key) return &e;
        return nullptr;
    }
};

struct PseudocodeAlternatives {
    std::vector<std::pair<std::string, std::string>> alternatives;  // (key, label)

    bool operator==(const PseudocodeAlternatives&) const = default;
};

namespace tables_detail {

inline Encoding parse_encoding(std::string_view field, size_t line_no) {
    Encoding enc;
    if (text::trim(field).empty()) return enc;
    for (const auto& part : text::split(field, ';')) {
        auto t = text::trim(part);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string_view::npos)
            throw SyntaxError("encoding entry '" + std::string(t) + "' lacks '=' on line " +
                              std::to_string(line_no));
        std::string label(text::trim(t.substr(0, eq)));
        int64_t raw;
        if (label.empty() || !text::parse_int(t.substr(eq + 1), raw))
            throw SyntaxError("bad encoding entry '" + std::string(t) + "' on line " +
                              std::to_string(line_no));
        for (const auto& [l, r] : enc.entries) {
            if (l == label)
                throw SyntaxError("duplicate encoding label '" + label + "' on line " +
                                  std::to_string(line_no));
            if (r == raw)
                throw SyntaxError("duplicate raw value " + std::to_string(raw) +
                                  " on line " + std::to_string(line_no));
        }
        enc.entries.emplace_back(std::move(label), raw);
    }
    return enc;
}

inline std::string serialize_encoding(const Encoding& enc) {
    std::string out;
    for (size_t i = 0; i < enc.entries.size(); ++i) {
        if (i) out += ';';
        out += enc.entries[i].first;
        out += '=';
        out += std::to_string(enc.entries[i].second);
    }
    return out;
}

inline std::vector<std::vector<std::string>> parse_rows(std::string_view document,
                                                        size_t max_fields,
                                                        std::vector<size_t>* line_nos) {
    std::vector<std::vector<std::string>> rows;
    size_t line_no = 0;
    for (const auto& raw : text::split(document, '\n')) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = text::split(line, '|');
        if (fields.size() > max_fields)
            throw SyntaxError("too many fields on line " + std::to_string(line_no));
        std::vector<std::string> trimmed;
        for (auto& f : fields) trimmed.emplace_back(text::trim(f));
        while (trimmed.size() < max_fields) trimmed.emplace_back();
        rows.push_back(std::move(trimmed));
        if (line_nos) line_nos->push_back(line_no);
    }
    return rows;
}

inline std::optional<std::string> opt_field(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return s;
}

}  // namespace tables_detail

inline CanTable parse_can_table(std::string_view document) {
    CanTable table;
    std::vector<size_t> line_nos;
    auto rows = tables_detail::parse_rows(document, 5, &line_nos);
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f[0].empty())
            throw SyntaxError("missing signal key on line " + std::to_string(line_nos[i]));
        if (table.find(f[0])) throw DuplicateKey("CAN signal '" + f[0] + "'");
        CanSignal sig;
        sig.key = f[0];
        sig.endpoint_hint = f[1];
        sig.unit_text = tables_detail::opt_field(f[2]);
        sig.encoding = tables_detail::parse_encoding(f[3], line_nos[i]);
        sig.pseudocode = tables_detail::opt_field(f[4]);
        table.signals.push_back(std::move(sig));
    }
    return table;
}

inline VvTable parse_vv_table(std::string_view document) {
    VvTable table;
    std::vector<size_t> line_nos;
    auto rows = tables_detail::parse_rows(document, 4, &line_nos);
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f[0].empty())
            throw SyntaxError("missing VV key on line " + std::to_string(line_nos[i]));
        if (table.find(f[0])) throw DuplicateKey("VV entry '" + f[0] + "'");
        VvEntry entry;
        entry.key = f[0];
        entry.bound_can_key = tables_detail::opt_field(f[1]);
        entry.unit_text = tables_detail::opt_field(f[2]);
        entry.encoding = tables_detail::parse_encoding(f[3], line_nos[i]);
        table.entries.push_back(std::move(entry));
    }
    return table;
}

inline std::string serialize_can_table(const CanTable& table) {
    std::string out = "# key | endpoint_hint | unit | encoding | pseudocode\n";
    for (const auto& s : table.signals) {
        out += s.key + " | " + s.endpoint_hint + " | " + s.unit_text.value_or("") + " | " +
               tables_detail::serialize_encoding(s.encoding) + " | " +
               s.pseudocode.value_or("") + "\n";
    }
    return out;
}

inline std::string serialize_vv_table(const VvTable& table) {
    std::string out = "# key | bound_can_key | unit | encoding\n";
    for (const auto& e : table.entries) {
        out += e.key + " | " + e.bound_can_key.value_or("") + " | " +
               e.unit_text.value_or("") + " | " +
               tables_detail::serialize_encoding(e.encoding) + "\n";
    }
    return out;
}

/// Parses the informal OR-chain grammar: pair ("OR" pair)*, pair = key ":"
/// label. Whitespace-insensitive. Anything else (AND, parentheses, missing
/// colon) raises GrammarError — surfaced, never guessed.
inline PseudocodeAlternatives parse_pseudocode(std::string_view expr) {
    struct Token {
        std::string value;
        bool is_colon;
    };
    std::vector<Token> tokens;
    size_t i = 0;
    while (i < expr.size()) {
        char c = expr[i];
        if (text::is_space(c)) {
            ++i;
            continue;
        }
        if (c == ':') {
            tokens.push_back({":", true});
            ++i;
            continue;
        }
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = i;
            while (i < expr.size() && (std::isalnum(static_cast<unsigned char>(expr[i])) ||
                                       expr[i] == '_'))
                ++i;
            tokens.push_back({std::string(expr.substr(start, i - start)), false});
            continue;
        }
        throw GrammarError("unexpected character '" + std::string(1, c) +
                           "' in pseudocode expression");
    }
    PseudocodeAlternatives alts;
    size_t t = 0;
    auto expect_ident = [&](const char* what) -> std::string {
        if (t >= tokens.size() || tokens[t].is_colon || tokens[t].value == "OR")
            throw GrammarError(std::string("expected ") + what + " in pseudocode expression");
        return tokens[t++].value;
    };
    while (true) {
        std::string key = expect_ident("key");
        if (t >= tokens.size() || !tokens[t].is_colon)
            throw GrammarError("expected ':' after key '" + key + "'");
        ++t;
        std::string label = expect_ident("label");
        for (const auto& [k, l] : alts.alternatives)
            if (k == key && l == label)
                throw GrammarError("duplicate alternative '" + key + ":" + label + "'");
        alts.alternatives.emplace_back(std::move(key), std::move(label));
        if (t == tokens.size()) break;
        if (tokens[t].is_colon || tokens[t].value != "OR")
            throw GrammarError("expected 'OR' between alternatives");
        ++t;
    }
    return alts;
}

inline std::string serialize_pseudocode(const PseudocodeAlternatives& alts) {
    std::string out;
    for (size_t i = 0; i < alts.alternatives.size(); ++i) {
        if (i) out += " OR ";
        out += alts.alternatives[i].first + ":" + alts.alternatives[i].second;
    }
    return out;
}

/// Name-based candidate retrieval: hint equals the endpoint path after
/// case-folding and stripping non-alphanumerics. Table order preserved.
inline std::vector<CanSignal> lookup_candidates(std::string_view endpoint_path,
                                                const CanTable& table) {
    std::vector<CanSignal> out;
    std::string want = text::fold_alnum(endpoint_path);
    for (const auto& s : table.signals)
        if (text::fold_alnum(s.endpoint_hint) == want) out.push_back(s);
    return out;
}

}  // namespace vapitest
