// SPDX-License-Identifier: Apache-2.0
#pragma once

// Parses OpenAPI-style API specifications (a YAML-like or JSON-like subset:
// paths, GET/PUT, object schemas with enum/range/format/x-unit) and extracts
// per-(endpoint, method) test object sets.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/text.hpp"
#include "vapitest/yaml_lite.hpp"

namespace vapitest {

using json = nlohmann::ordered_json;

enum class Method { GET, PUT };

inline std::string to_string(Method m) { return m == Method::GET ? "GET" : "PUT"; }

inline Method method_from_string(std::string_view s) {
    auto u = text::upper(s);
    if (u == "GET") return Method::GET;
    if (u == "PUT") return Method::PUT;
    throw SchemaError("unsupported method '" + std::string(s) + "'");
}

enum class DomainKind { enumeration, numeric_range, boolean, free_text, datetime };

inline std::string to_string(DomainKind k) {
    switch (k) {
        case DomainKind::enumeration: return "enumeration";
        case DomainKind::numeric_range: return "numeric_range";
        case DomainKind::boolean: return "boolean";
        case DomainKind::free_text: return "free_text";
        case DomainKind::datetime: return "datetime";
    }
    return "?";
}

inline DomainKind domain_kind_from_string(std::string_view s) {
    if (s == "enumeration") return DomainKind::enumeration;
    if (s == "numeric_range") return DomainKind::numeric_range;
    if (s == "boolean") return DomainKind::boolean;
    if (s == "free_text") return DomainKind::free_text;
    if (s == "datetime") return DomainKind::datetime;
    throw SchemaError("unknown domain kind '" + std::string(s) + "'");
}

struct ValueDomain {
    DomainKind kind = DomainKind::free_text;
    std::vector<std::string> labels;  // enumeration only
    bool has_bounds = false;          // numeric_range only
    double min = 0.0;
    double max = 0.0;

    bool operator==(const ValueDomain&) const = default;

    static ValueDomain enumeration(std::vector<std::string> labels) {
        ValueDomain d;
        d.kind = DomainKind::enumeration;
        d.labels = std::move(labels);
        return d;
    }
    static ValueDomain numeric(double min, double max) {
        ValueDomain d;
        d.kind = DomainKind::numeric_range;
        d.has_bounds = true;
        d.min = min;
        d.max = max;
        return d;
    }
    static ValueDomain boolean() { return ValueDomain{DomainKind::boolean}; }
    static ValueDomain datetime() { return ValueDomain{DomainKind::datetime}; }
};

enum class DeclaredType { boolean, integer, number, string, enumeration, datetime };

inline std::string to_string(DeclaredType t) {
    switch (t) {
        case DeclaredType::boolean: return "boolean";
        case DeclaredType::integer: return "integer";
        case DeclaredType::number: return "number";
        case DeclaredType::string: return "string";
        case DeclaredType::enumeration: return "enum";
        case DeclaredType::datetime: return "datetime";
    }
    return "?";
}

inline DeclaredType declared_type_from_string(std::string_view s) {
    if (s == "boolean") return DeclaredType::boolean;
    if (s == "integer") return DeclaredType::integer;
    if (s == "number") return DeclaredType::number;
    if (s == "string") return DeclaredType::string;
    if (s == "enum") return DeclaredType::enumeration;
    if (s == "datetime") return DeclaredType::datetime;
    throw SchemaError("unknown declared type '" + std::string(s) + "'");
}

struct ApiProperty {
    std::string key;
    ValueDomain domain;
    std::optional<std::string> unit_text;
    std::optional<std::string> description;
    DeclaredType declared_type = DeclaredType::string;

    bool operator==(const ApiProperty&) const = default;
};

struct Endpoint {
    std::string path;              // begins with "/"
    std::vector<Method> methods;   // document order, GET/PUT only
    std::vector<ApiProperty> properties;

    bool operator==(const Endpoint&) const = default;

    bool has_method(Method m) const {
        for (auto x : methods)
            if (x == m) return true;
        return false;
    }
};

struct ApiSpec {
    std::vector<Endpoint> endpoints;
    std::string source_path;

    bool operator==(const ApiSpec&) const = default;
};

/// The (kᵢ, vᵢ) object transacted by one endpoint+method.
struct TestObjectSet {
    std::string endpoint_path;
    Method method = Method::GET;
    std::vector<ApiProperty> properties;

    bool operator==(const TestObjectSet&) const = default;
};

enum class SpecFormat { yaml_like, json_like };

/// Splits informal enum notation ("STANDARD or ECONOMY", "A, B or C") into
/// labels. Separators are fixed; anything else stays part of the label.
/// When `enum_declared`, fewer than 2 distinct labels is an error.
inline std::vector<std::string> normalize_informal_enum(std::string_view raw,
                                                        bool enum_declared = true) {
    if (text::trim(raw).empty()) throw AmbiguousEnum("empty enum text");
    static const std::string_view seps[] = {" or ", " OR ", "/", ","};
    std::vector<std::string> out;
    std::string cur;
    size_t i = 0;
    auto flush = [&] {
        auto t = text::trim(cur);
        if (!t.empty()) {
            std::string label(t);
            bool dup = false;
            for (const auto& l : out) dup = dup || l == label;
            if (!dup) out.push_back(std::move(label));
        }
        cur.clear();
    };
    while (i < raw.size()) {
        bool matched = false;
        for (auto sep : seps) {
            if (raw.substr(i, sep.size()) == sep) {
                flush();
                i += sep.size();
                matched = true;
                break;
            }
        }
        if (!matched) cur += raw[i++];
    }
    flush();
    if (enum_declared && out.size() < 2)
        throw AmbiguousEnum("enumeration declared but only " + std::to_string(out.size()) +
                            " label(s) in '" + std::string(raw) + "'");
    return out;
}

namespace spec_detail {

inline const json* find_ci(const json& obj, std::string_view key) {
    if (!obj.is_object()) return nullptr;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (text::lower(it.key()) == text::lower(key)) return &it.value();
    }
    return nullptr;
}

inline const json& resolve_ref(const json& root, const json& node) {
    if (node.is_object() && node.contains("$ref")) {
        std::string ref = node["$ref"].get<std::string>();
        if (ref.rfind("#/", 0) != 0)
            throw SchemaError("only intra-document $ref is supported: " + ref);
        const json* cur = &root;
        for (const auto& part : text::split(std::string_view(ref).substr(2), '/')) {
            if (!cur->is_object() || !cur->contains(part))
                throw SchemaError("unresolvable $ref: " + ref);
            cur = &(*cur)[part];
        }
        return *cur;
    }
    return node;
}

inline std::vector<std::string> enum_labels_from(const json& node) {
    std::vector<std::string> labels;
    if (node.is_string()) return normalize_informal_enum(node.get<std::string>());
    if (!node.is_array()) throw SchemaError("enum must be a list or informal string");
    for (const auto& el : node) {
        if (!el.is_string()) throw SchemaError("enum labels must be strings");
        std::string label(text::trim(el.get<std::string>()));
        if (label.empty()) throw SchemaError("empty enum label");
        labels.push_back(std::move(label));
    }
    if (labels.size() == 1) {
        // tolerate the informal single-string-in-a-list form
        return normalize_informal_enum(labels[0]);
    }
    for (size_t i = 0; i < labels.size(); ++i)
        for (size_t j = i + 1; j < labels.size(); ++j)
            if (labels[i] == labels[j])
                throw SchemaError("duplicate enum label '" + labels[i] + "'");
    if (labels.size() < 2) throw AmbiguousEnum("enumeration with fewer than 2 labels");
    return labels;
}

inline ApiProperty parse_property(const std::string& name, const json& node) {
    if (!node.is_object()) throw SchemaError("property '" + name + "' must be an object");
    ApiProperty prop;
    prop.key = name;
    std::string type = node.contains("type") ? node["type"].get<std::string>() : "string";
    std::string format = node.contains("format") ? node["format"].get<std::string>() : "";

    if (node.contains("enum")) {
        prop.declared_type = DeclaredType::enumeration;
        prop.domain = ValueDomain::enumeration(enum_labels_from(node["enum"]));
    } else if (type == "boolean") {
        prop.declared_type = DeclaredType::boolean;
        prop.domain = ValueDomain::boolean();
    } else if (type == "integer" || type == "number") {
        prop.declared_type =
            type == "integer" ? DeclaredType::integer : DeclaredType::number;
        prop.domain.kind = DomainKind::numeric_range;
        if (node.contains("minimum") && node.contains("maximum")) {
            double lo = node["minimum"].get<double>();
            double hi = node["maximum"].get<double>();
            if (lo > hi)
                throw SchemaError("property '" + name + "' has minimum > maximum");
            prop.domain = ValueDomain::numeric(lo, hi);
        }
    } else if (type == "string" && format == "date-time") {
        prop.declared_type = DeclaredType::datetime;
        prop.domain = ValueDomain::datetime();
    } else if (type == "string") {
        prop.declared_type = DeclaredType::string;
        prop.domain.kind = DomainKind::free_text;
    } else {
        throw SchemaError("property '" + name + "' has unsupported type '" + type + "'");
    }

    if (node.contains("x-unit") && node["x-unit"].is_string()) {
        std::string u(text::trim(node["x-unit"].get<std::string>()));
        if (!u.empty()) prop.unit_text = u;
    }
    if (node.contains("description") && node["description"].is_string())
        prop.description = node["description"].get<std::string>();
    return prop;
}

inline std::vector<ApiProperty> parse_schema(const json& root, const json& schema_node) {
    const json& schema = resolve_ref(root, schema_node);
    if (!schema.is_object()) throw SchemaError("schema must be an object");
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    std::vector<ApiProperty> out;
    if (!props) return out;
    if (!props->is_object()) throw SchemaError("'properties' must be an object");
    for (auto it = props->begin(); it != props->end(); ++it)
        out.push_back(parse_property(it.key(), it.value()));
    return out;
}

// Digs out the transacted object schema of one method node.
inline const json* method_schema(const json& root, const json& op, Method m) {
    auto content_schema = [&](const json& content) -> const json* {
        if (!content.is_object()) return nullptr;
        for (auto it = content.begin(); it != content.end(); ++it) {
            if (it.value().is_object() && it.value().contains("schema"))
                return &it.value()["schema"];
        }
        return nullptr;
    };
    if (m == Method::PUT) {
        if (const json* rb = find_ci(op, "requestBody")) {
            if (rb->is_object() && rb->contains("content"))
                return content_schema((*rb)["content"]);
        }
        return nullptr;
    }
    if (const json* resp = find_ci(op, "responses")) {
        if (const json* ok = find_ci(*resp, "200")) {
            if (ok->is_object() && ok->contains("content"))
                return content_schema((*ok)["content"]);
        }
    }
    return nullptr;
}

}  // namespace spec_detail

inline ApiSpec parse_spec(std::string_view document, SpecFormat format,
                          std::string source_path = "") {
    json root;
    if (format == SpecFormat::json_like) {
        try {
            root = json::parse(document);
        } catch (const nlohmann::json::exception& e) {
            throw SyntaxError(e.what());
        }
    } else {
        root = yaml_lite::parse(document);
    }
    if (!root.is_object() || !root.contains("paths") || !root["paths"].is_object() ||
        root["paths"].empty())
        throw SchemaError("no endpoints found");

    ApiSpec spec;
    spec.source_path = std::move(source_path);
    for (auto it = root["paths"].begin(); it != root["paths"].end(); ++it) {
        Endpoint ep;
        ep.path = it.key();
        if (ep.path.empty() || ep.path.front() != '/')
            throw SchemaError("endpoint path '" + ep.path + "' must begin with '/'");
        if (!it.value().is_object())
            throw SchemaError("path item for '" + ep.path + "' must be an object");

        const json* put_schema = nullptr;
        const json* get_schema = nullptr;
        for (auto mit = it.value().begin(); mit != it.value().end(); ++mit) {
            std::string mkey = text::lower(mit.key());
            if (mkey != "get" && mkey != "put") continue;  // out-of-subset methods
            Method m = mkey == "get" ? Method::GET : Method::PUT;
            ep.methods.push_back(m);
            const json* schema = spec_detail::method_schema(root, mit.value(), m);
            (m == Method::PUT ? put_schema : get_schema) = schema;
        }
        if (ep.methods.empty()) continue;

        const json* schema = put_schema ? put_schema : get_schema;
        if (schema) ep.properties = spec_detail::parse_schema(root, *schema);
        if (ep.has_method(Method::PUT) && ep.properties.empty())
            throw SchemaError("PUT endpoint '" + ep.path + "' has no properties");
        for (const auto& other : spec.endpoints)
            if (other.path == ep.path)
                throw SchemaError("duplicate endpoint path '" + ep.path + "'");
        spec.endpoints.push_back(std::move(ep));
    }
    if (spec.endpoints.empty()) throw SchemaError("no endpoints found");
    return spec;
}

/// Canonical JSON-like serialization; parse_spec(serialize_spec(s)) == s.
inline std::string serialize_spec(const ApiSpec& spec) {
    json root;
    root["openapi"] = "3.0.0";
    root["paths"] = json::object();
    for (const auto& ep : spec.endpoints) {
        json schema;
        schema["type"] = "object";
        schema["properties"] = json::object();
        for (const auto& p : ep.properties) {
            json node;
            switch (p.declared_type) {
                case DeclaredType::boolean: node["type"] = "boolean"; break;
                case DeclaredType::integer: node["type"] = "integer"; break;
                case DeclaredType::number: node["type"] = "number"; break;
                case DeclaredType::string: node["type"] = "string"; break;
                case DeclaredType::enumeration:
                    node["type"] = "string";
                    node["enum"] = p.domain.labels;
                    break;
                case DeclaredType::datetime:
                    node["type"] = "string";
                    node["format"] = "date-time";
                    break;
            }
            if (p.domain.kind == DomainKind::numeric_range && p.domain.has_bounds) {
                node["minimum"] = p.domain.min;
                node["maximum"] = p.domain.max;
            }
            if (p.unit_text) node["x-unit"] = *p.unit_text;
            if (p.description) node["description"] = *p.description;
            schema["properties"][p.key] = std::move(node);
        }
        json item = json::object();
        for (Method m : ep.methods) {
            json op = json::object();
            if (m == Method::PUT) {
                op["requestBody"]["content"]["application/json"]["schema"] = schema;
                op["responses"]["200"]["description"] = "ok";
            } else {
                op["responses"]["200"]["content"]["application/json"]["schema"] = schema;
            }
            item[m == Method::PUT ? "put" : "get"] = std::move(op);
        }
        root["paths"][ep.path] = std::move(item);
    }
    return root.dump(2);
}

/// One TestObjectSet per (endpoint, method), in document order.
inline std::vector<TestObjectSet> extract_test_objects(const ApiSpec& spec) {
    std::vector<TestObjectSet> out;
    for (const auto& ep : spec.endpoints) {
        for (Method m : ep.methods) {
            TestObjectSet set;
            set.endpoint_path = ep.path;
            set.method = m;
            set.properties = ep.properties;
            out.push_back(std::move(set));
        }
    }
    return out;
}

// --- JSON bindings for pipeline artifacts ---

inline void to_json(json& j, const ValueDomain& d) {
    j = json{{"kind", to_string(d.kind)}};
    if (d.kind == DomainKind::enumeration) j["labels"] = d.labels;
    if (d.kind == DomainKind::numeric_range) {
        j["has_bounds"] = d.has_bounds;
        if (d.has_bounds) {
            j["min"] = d.min;
            j["max"] = d.max;
        }
    }
}

inline void from_json(const json& j, ValueDomain& d) {
    d = ValueDomain{};
    d.kind = domain_kind_from_string(j.at("kind").get<std::string>());
    if (d.kind == DomainKind::enumeration)
        d.labels = j.at("labels").get<std::vector<std::string>>();
    if (d.kind == DomainKind::numeric_range) {
        d.has_bounds = j.value("has_bounds", false);
        if (d.has_bounds) {
            d.min = j.at("min").get<double>();
            d.max = j.at("max").get<double>();
        }
    }
}

inline void to_json(json& j, const ApiProperty& p) {
    j = json{{"key", p.key},
             {"declared_type", to_string(p.declared_type)},
             {"domain", p.domain}};
    if (p.unit_text) j["unit"] = *p.unit_text;
    if (p.description) j["description"] = *p.description;
}

inline void from_json(const json& j, ApiProperty& p) {
    p = ApiProperty{};
    p.key = j.at("key").get<std::string>();
    p.declared_type = declared_type_from_string(j.at("declared_type").get<std::string>());
    p.domain = j.at("domain").get<ValueDomain>();
    if (j.contains("unit")) p.unit_text = j["unit"].get<std::string>();
    if (j.contains("description")) p.description = j["description"].get<std::string>();
}

inline void to_json(json& j, const TestObjectSet& s) {
    j = json{{"endpoint", s.endpoint_path},
             {"method", to_string(s.method)},
             {"properties", s.properties}};
}

inline void from_json(const json& j, TestObjectSet& s) {
    s = TestObjectSet{};
    s.endpoint_path = j.at("endpoint").get<std::string>();
    s.method = method_from_string(j.at("method").get<std::string>());
    s.properties = j.at("properties").get<std::vector<ApiProperty>>();
}

}  // namespace vapitest
