// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal YAML subset parser, enough for OpenAPI-style documents: block
// mappings by indentation, block sequences of scalars, flow sequences
// [a, b], quoted and plain scalars, and '#' comments. Anchors, multi-line
// scalars, flow mappings and tabs are rejected with SyntaxError.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/text.hpp"

namespace vapitest::yaml_lite {

using json = nlohmann::ordered_json;

namespace detail {

struct Line {
    size_t indent = 0;
    std::string content;  // comment-stripped, right-trimmed
    size_t number = 0;    // 1-based source line
};

inline std::string strip_comment(std::string_view raw, size_t line_no) {
    std::string out;
    char quote = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (quote) {
            if (c == '\\' && quote == '"' && i + 1 < raw.size()) {
                out += c;
                out += raw[++i];
                continue;
            }
            if (c == quote) quote = 0;
            out += c;
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            out += c;
            continue;
        }
        if (c == '#' && (i == 0 || raw[i - 1] == ' ' || raw[i - 1] == '\t')) break;
        out += c;
    }
    if (quote) throw SyntaxError("unterminated quote on line " + std::to_string(line_no));
    while (!out.empty() && text::is_space(out.back())) out.pop_back();
    return out;
}

inline std::vector<Line> split_lines(std::string_view doc) {
    std::vector<Line> lines;
    size_t line_no = 0;
    for (const auto& raw : text::split(doc, '\n')) {
        ++line_no;
        std::string stripped = strip_comment(raw, line_no);
        size_t indent = 0;
        while (indent < stripped.size() && stripped[indent] == ' ') ++indent;
        if (indent < stripped.size() && stripped[indent] == '\t')
            throw SyntaxError("tab indentation on line " + std::to_string(line_no));
        if (indent == stripped.size()) continue;  // blank
        if (stripped.substr(indent) == "---") continue;
        lines.push_back({indent, stripped.substr(indent), line_no});
    }
    return lines;
}

inline json parse_scalar(std::string_view s, size_t line_no);

// Splits a flow sequence body at top-level commas.
inline json parse_flow_seq(std::string_view s, size_t line_no) {
    json arr = json::array();
    std::string_view body = s.substr(1, s.size() - 2);
    std::string cur;
    char quote = 0;
    int depth = 0;
    auto flush = [&] {
        auto t = text::trim(cur);
        if (!t.empty()) arr.push_back(parse_scalar(t, line_no));
        cur.clear();
    };
    for (size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (quote) {
            if (c == '\\' && quote == '"' && i + 1 < body.size()) {
                cur += c;
                cur += body[++i];
                continue;
            }
            if (c == quote) quote = 0;
            cur += c;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == ',' && depth == 0) {
            flush();
            continue;
        }
        cur += c;
    }
    flush();
    return arr;
}

inline std::string unquote(std::string_view s, size_t line_no) {
    char q = s.front();
    if (s.size() < 2 || s.back() != q)
        throw SyntaxError("unterminated scalar on line " + std::to_string(line_no));
    std::string_view body = s.substr(1, s.size() - 2);
    std::string out;
    for (size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (q == '"' && c == '\\' && i + 1 < body.size()) {
            char e = body[++i];
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: out += e; break;
            }
            continue;
        }
        out += c;
    }
    return out;
}

inline json parse_scalar(std::string_view s, size_t line_no) {
    s = text::trim(s);
    if (s.empty()) return json();
    if (s.front() == '[') {
        if (s.back() != ']')
            throw SyntaxError("unterminated flow sequence on line " + std::to_string(line_no));
        return parse_flow_seq(s, line_no);
    }
    if (s.front() == '{')
        throw SyntaxError("flow mappings are not supported (line " + std::to_string(line_no) + ")");
    if (s.front() == '"' || s.front() == '\'') return json(unquote(s, line_no));
    if (s == "true") return json(true);
    if (s == "false") return json(false);
    if (s == "null" || s == "~") return json();
    int64_t i;
    if (text::parse_int(s, i)) return json(i);
    double d;
    if (text::parse_double(s, d)) return json(d);
    return json(std::string(s));
}

// Finds the key/value split of a mapping line, honoring quoted keys.
inline std::optional<std::pair<std::string, std::string>> split_key(
    const std::string& content, size_t line_no) {
    size_t pos = 0;
    if (content.front() == '"' || content.front() == '\'') {
        char q = content.front();
        size_t end = content.find(q, 1);
        if (end == std::string::npos)
            throw SyntaxError("unterminated key on line " + std::to_string(line_no));
        if (end + 1 >= content.size() || content[end + 1] != ':') return std::nullopt;
        std::string key = unquote(std::string_view(content).substr(0, end + 1), line_no);
        return {{key, std::string(text::trim(std::string_view(content).substr(end + 2)))}};
    }
    // plain key: first ':' followed by space or end of line
    for (pos = 0; pos < content.size(); ++pos) {
        if (content[pos] == ':' &&
            (pos + 1 == content.size() || content[pos + 1] == ' ')) {
            std::string key(text::trim(std::string_view(content).substr(0, pos)));
            std::string rest(text::trim(std::string_view(content).substr(pos + 1)));
            if (key.empty())
                throw SyntaxError("empty key on line " + std::to_string(line_no));
            return {{key, rest}};
        }
        if (content[pos] == '"' || content[pos] == '\'') return std::nullopt;
    }
    return std::nullopt;
}

inline json parse_block(const std::vector<Line>& lines, size_t& idx, size_t indent);

inline json parse_sequence(const std::vector<Line>& lines, size_t& idx, size_t indent) {
    json arr = json::array();
    while (idx < lines.size() && lines[idx].indent == indent &&
           lines[idx].content.rfind("-", 0) == 0 &&
           (lines[idx].content.size() == 1 || lines[idx].content[1] == ' ')) {
        const Line& line = lines[idx];
        std::string rest(text::trim(std::string_view(line.content).substr(1)));
        ++idx;
        if (rest.empty()) {
            // nested block item
            if (idx < lines.size() && lines[idx].indent > indent)
                arr.push_back(parse_block(lines, idx, lines[idx].indent));
            else
                arr.push_back(json());
        } else {
            arr.push_back(parse_scalar(rest, line.number));
        }
    }
    return arr;
}

inline json parse_block(const std::vector<Line>& lines, size_t& idx, size_t indent) {
    const Line& first = lines[idx];
    if (first.content.rfind("-", 0) == 0 &&
        (first.content.size() == 1 || first.content[1] == ' '))
        return parse_sequence(lines, idx, indent);

    json obj = json::object();
    while (idx < lines.size() && lines[idx].indent == indent) {
        const Line& line = lines[idx];
        auto kv = split_key(line.content, line.number);
        if (!kv)
            throw SyntaxError("expected 'key: value' on line " + std::to_string(line.number));
        if (obj.contains(kv->first))
            throw SyntaxError("duplicate mapping key '" + kv->first + "' on line " +
                              std::to_string(line.number));
        ++idx;
        if (!kv->second.empty()) {
            obj[kv->first] = parse_scalar(kv->second, line.number);
        } else if (idx < lines.size() && lines[idx].indent > indent) {
            obj[kv->first] = parse_block(lines, idx, lines[idx].indent);
        } else {
            obj[kv->first] = json();
        }
        if (idx < lines.size() && lines[idx].indent > indent)
            throw SyntaxError("unexpected indentation on line " +
                              std::to_string(lines[idx].number));
    }
    return obj;
}

}  // namespace detail

inline json parse(std::string_view doc) {
    auto lines = detail::split_lines(doc);
    if (lines.empty()) throw SyntaxError("empty document");
    size_t idx = 0;
    json root = detail::parse_block(lines, idx, lines[0].indent);
    if (idx != lines.size())
        throw SyntaxError("trailing content on line " + std::to_string(lines[idx].number));
    return root;
}

}  // namespace vapitest::yaml_lite
