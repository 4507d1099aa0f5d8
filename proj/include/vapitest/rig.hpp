// SPDX-License-Identifier: Apache-2.0
#pragma once

// Simulated test rig core: the gateway mapping (API value -> CAN raw -> VV
// raw and back), the in-memory Virtual Vehicle table, the CAN frame trace,
// and fault injection. Transport-agnostic; rig_server.hpp puts it behind
// loopback HTTP.

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/spec_ingest.hpp"
#include "vapitest/testcase_gen.hpp"
#include "vapitest/unit_engine.hpp"

namespace vapitest {

enum class FaultKind { wrong_scale, swapped_enum, dead_signal, stale_state, wrong_unit };

inline std::string to_string(FaultKind k) {
    switch (k) {
        case FaultKind::wrong_scale: return "wrong_scale";
        case FaultKind::swapped_enum: return "swapped_enum";
        case FaultKind::dead_signal: return "dead_signal";
        case FaultKind::stale_state: return "stale_state";
        case FaultKind::wrong_unit: return "wrong_unit";
    }
    return "?";
}

inline FaultKind fault_kind_from_string(std::string_view s) {
    for (auto k : {FaultKind::wrong_scale, FaultKind::swapped_enum, FaultKind::dead_signal,
                   FaultKind::stale_state, FaultKind::wrong_unit})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown fault kind '" + std::string(s) + "'");
}

struct FaultSpec {
    FaultKind kind = FaultKind::wrong_scale;
    std::string target;  // endpoint path or CAN key
    double factor = 1.0;        // wrong_scale
    std::string label_a;        // swapped_enum
    std::string label_b;

    bool operator==(const FaultSpec&) const = default;
};

struct CanFrame {
    std::string key;
    double raw = 0.0;
    int64_t timestamp = 0;  // monotonic tick

    bool operator==(const CanFrame&) const = default;
};

enum class RigPropKind { enumeration, boolean, numeric, datetime };

inline std::string to_string(RigPropKind k) {
    switch (k) {
        case RigPropKind::enumeration: return "enum";
        case RigPropKind::boolean: return "boolean";
        case RigPropKind::numeric: return "numeric";
        case RigPropKind::datetime: return "datetime";
    }
    return "?";
}

inline RigPropKind rig_prop_kind_from_string(std::string_view s) {
    if (s == "enum") return RigPropKind::enumeration;
    if (s == "boolean") return RigPropKind::boolean;
    if (s == "numeric") return RigPropKind::numeric;
    if (s == "datetime") return RigPropKind::datetime;
    throw ConfigError("unknown rig property kind '" + std::string(s) + "'");
}

/// One API label realized on the bus. can_key usually equals the property's
/// primary signal; pseudocode-style chains may redirect single labels.
struct RigLabelMap {
    std::string api_label;
    std::string can_key;
    int64_t can_raw = 0;
    double vv_raw = 0.0;

    bool operator==(const RigLabelMap&) const = default;
};

struct RigPropertyConfig {
    std::string key;
    RigPropKind kind = RigPropKind::enumeration;
    std::string can_key;               // primary signal (numeric/enum/boolean)
    std::vector<RigLabelMap> labels;   // enum/boolean
    Rational api_to_can{1, 1};         // numeric
    Rational can_to_vv{1, 1};
    std::string hours_can_key;         // datetime
    std::string minutes_can_key;

    bool operator==(const RigPropertyConfig&) const = default;
};

struct RigEndpointConfig {
    std::string path;
    std::vector<Method> methods;
    std::vector<RigPropertyConfig> properties;

    bool operator==(const RigEndpointConfig&) const = default;
};

struct RigConfig {
    std::vector<RigEndpointConfig> endpoints;
    std::map<std::string, std::string> vv_bindings;  // CAN key -> VV key
    std::map<std::string, double> vv_defaults;       // VV key -> default raw
    std::vector<FaultSpec> faults;

    bool operator==(const RigConfig&) const = default;
};

class Rig {
public:
    explicit Rig(RigConfig config) : config_(std::move(config)) {
        validate();
        for (const auto& [can, vv] : config_.vv_bindings) vv_keys_.insert(vv);
        for (const auto& [vv, raw] : config_.vv_defaults) vv_keys_.insert(vv);
        faults_ = config_.faults;
    }

    struct ApiResult {
        int status = 200;
        json body;
    };

    const RigConfig& config() const { return config_; }

    ApiResult api_put(const std::string& endpoint, const json& payload) {
        std::lock_guard lock(mutex_);
        const RigEndpointConfig* ep = find_endpoint(endpoint, Method::PUT);
        if (!ep) return {404, json{{"error", "unknown endpoint or method"}}};
        if (!payload.is_object()) return {400, json{{"error", "payload must be an object"}}};
        for (auto it = payload.begin(); it != payload.end(); ++it) {
            const RigPropertyConfig* prop = find_property(*ep, it.key());
            if (!prop) return {400, json{{"error", "unknown property '" + it.key() + "'"}}};
            std::string err = write_property(*ep, *prop, it.value());
            if (!err.empty()) return {400, json{{"error", err}}};
        }
        return {200, json{{"status", "ok"}}};
    }

    ApiResult api_get(const std::string& endpoint) {
        std::lock_guard lock(mutex_);
        const RigEndpointConfig* ep = find_endpoint(endpoint, Method::GET);
        if (!ep) return {404, json{{"error", "unknown endpoint or method"}}};
        json body = json::object();
        for (const auto& prop : ep->properties)
            body[prop.key] = read_property(*ep, prop);
        return {200, body};
    }

    /// Mock path: direct VV table access bypassing the gateway.
    void vv_set(const std::string& key, double raw) {
        std::lock_guard lock(mutex_);
        if (!vv_keys_.count(key)) throw UnknownKey("VV key '" + key + "'");
        store_vv(key, raw);
    }

    double vv_get(const std::string& key) const {
        std::lock_guard lock(mutex_);
        if (!vv_keys_.count(key)) throw UnknownKey("VV key '" + key + "'");
        return current_vv(key);
    }

    void inject_fault(const FaultSpec& fault) {
        std::lock_guard lock(mutex_);
        if (!target_exists(fault.target))
            throw UnknownTarget("fault target '" + fault.target + "'");
        faults_.push_back(fault);
    }

    std::vector<CanFrame> can_trace() const {
        std::lock_guard lock(mutex_);
        return trace_;
    }

    std::set<std::string> vv_keys() const { return vv_keys_; }

private:
    void validate() const {
        for (const auto& ep : config_.endpoints) {
            if (ep.path.empty() || ep.path.front() != '/')
                throw ConfigError("endpoint path '" + ep.path + "' must begin with '/'");
            for (const auto& p : ep.properties) {
                std::vector<std::string> keys;
                if (p.kind == RigPropKind::datetime) {
                    keys = {p.hours_can_key, p.minutes_can_key};
                } else {
                    keys = {p.can_key};
                    for (const auto& l : p.labels) keys.push_back(l.can_key);
                }
                for (const auto& k : keys) {
                    if (k.empty() || !config_.vv_bindings.count(k))
                        throw ConfigError("CAN key '" + k + "' of property '" + p.key +
                                          "' has no VV binding");
                }
                if ((p.kind == RigPropKind::enumeration || p.kind == RigPropKind::boolean) &&
                    p.labels.empty())
                    throw ConfigError("property '" + p.key + "' has no label map");
                if (p.kind == RigPropKind::numeric &&
                    (p.api_to_can.num <= 0 || p.can_to_vv.num <= 0))
                    throw ConfigError("property '" + p.key + "' has non-positive conversion");
            }
        }
        for (const auto& f : config_.faults)
            if (!target_exists(f.target))
                throw ConfigError("fault target '" + f.target + "' does not exist");
    }

    bool target_exists(const std::string& target) const {
        for (const auto& ep : config_.endpoints)
            if (ep.path == target) return true;
        return config_.vv_bindings.count(target) > 0;
    }

    const RigEndpointConfig* find_endpoint(const std::string& path, Method m) const {
        for (const auto& ep : config_.endpoints) {
            if (ep.path != path) continue;
            for (Method have : ep.methods)
                if (have == m) return &ep;
        }
        return nullptr;
    }

    static const RigPropertyConfig* find_property(const RigEndpointConfig& ep,
                                                  const std::string& key) {
        for (const auto& p : ep.properties)
            if (p.key == key) return &p;
        return nullptr;
    }

    const FaultSpec* fault_for(FaultKind kind, const std::string& endpoint,
                               const std::string& can_key) const {
        for (const auto& f : faults_)
            if (f.kind == kind && (f.target == endpoint || f.target == can_key)) return &f;
        return nullptr;
    }

    const std::string& binding(const std::string& can_key) const {
        return config_.vv_bindings.at(can_key);
    }

    double current_vv(const std::string& vv_key) const {
        auto it = vv_.find(vv_key);
        if (it != vv_.end()) return it->second;
        auto d = config_.vv_defaults.find(vv_key);
        return d != config_.vv_defaults.end() ? d->second : 0.0;
    }

    void store_vv(const std::string& vv_key, double raw) {
        vv_prev_[vv_key] = current_vv(vv_key);
        vv_[vv_key] = raw;
        stale_pending_[vv_key] = true;
    }

    /// Bus transmission: logs the frame and lands the value in the VV table.
    /// Dead signals transmit nothing.
    bool transmit(const std::string& endpoint, const std::string& can_key, double can_raw,
                  double vv_raw) {
        if (fault_for(FaultKind::dead_signal, endpoint, can_key)) return false;
        trace_.push_back({can_key, can_raw, tick_++});
        store_vv(binding(can_key), vv_raw);
        return true;
    }

    /// Bus read: logs the frame and returns the VV value behind the signal,
    /// honoring dead and stale faults.
    std::optional<double> receive(const std::string& endpoint, const std::string& can_key) {
        const std::string& vv_key = binding(can_key);
        if (fault_for(FaultKind::dead_signal, endpoint, can_key)) {
            auto d = config_.vv_defaults.find(vv_key);
            return d != config_.vv_defaults.end() ? std::optional(d->second)
                                                  : std::optional(0.0);
        }
        double value = current_vv(vv_key);
        if (fault_for(FaultKind::stale_state, endpoint, can_key)) {
            auto pending = stale_pending_.find(vv_key);
            if (pending != stale_pending_.end() && pending->second) {
                value = vv_prev_.count(vv_key) ? vv_prev_.at(vv_key) : value;
                pending->second = false;  // only the first read after a write lags
            }
        }
        trace_.push_back({can_key, value, tick_++});
        return value;
    }

    std::string write_property(const RigEndpointConfig& ep, const RigPropertyConfig& prop,
                               const json& value) {
        switch (prop.kind) {
            case RigPropKind::enumeration:
            case RigPropKind::boolean: {
                std::string label;
                if (prop.kind == RigPropKind::boolean) {
                    if (!value.is_boolean()) return "property '" + prop.key + "' expects a boolean";
                    label = value.get<bool>() ? "TRUE" : "FALSE";
                } else {
                    if (!value.is_string()) return "property '" + prop.key + "' expects a label";
                    label = value.get<std::string>();
                }
                if (const FaultSpec* f =
                        fault_for(FaultKind::swapped_enum, ep.path, prop.can_key)) {
                    if (label == f->label_a)
                        label = f->label_b;
                    else if (label == f->label_b)
                        label = f->label_a;
                }
                const RigLabelMap* entry = nullptr;
                for (const auto& l : prop.labels)
                    if (l.api_label == label) entry = &l;
                if (!entry) return "unknown value '" + label + "' for '" + prop.key + "'";
                transmit(ep.path, entry->can_key, static_cast<double>(entry->can_raw),
                         entry->vv_raw);
                return "";
            }
            case RigPropKind::numeric: {
                if (!value.is_number()) return "property '" + prop.key + "' expects a number";
                double v = value.get<double>();
                double can_raw = fault_for(FaultKind::wrong_unit, ep.path, prop.can_key)
                                     ? v  // unit confusion: conversion skipped
                                     : prop.api_to_can.apply(v);
                if (const FaultSpec* f =
                        fault_for(FaultKind::wrong_scale, ep.path, prop.can_key))
                    can_raw *= f->factor;
                transmit(ep.path, prop.can_key, can_raw, prop.can_to_vv.apply(can_raw));
                return "";
            }
            case RigPropKind::datetime: {
                if (!value.is_string()) return "property '" + prop.key + "' expects HH:MM";
                int64_t h, m;
                try {
                    auto parts = parse_hhmm(value.get<std::string>());
                    h = parts.first;
                    m = parts.second;
                } catch (const SyntaxError& e) {
                    return e.what();
                }
                transmit(ep.path, prop.hours_can_key, static_cast<double>(h),
                         static_cast<double>(h));
                transmit(ep.path, prop.minutes_can_key, static_cast<double>(m),
                         static_cast<double>(m));
                return "";
            }
        }
        return "unreachable";
    }

    json read_property(const RigEndpointConfig& ep, const RigPropertyConfig& prop) {
        switch (prop.kind) {
            case RigPropKind::enumeration:
            case RigPropKind::boolean: {
                // a label is active when its bound VV state holds its raw value
                const RigLabelMap* active = nullptr;
                for (const auto& l : prop.labels) {
                    auto vv = receive_for_label(ep, prop, l);
                    if (vv && *vv == l.vv_raw) {
                        active = &l;
                        break;
                    }
                }
                const RigLabelMap* reported = active ? active : &prop.labels.front();
                std::string label = reported->api_label;
                if (const FaultSpec* f =
                        fault_for(FaultKind::swapped_enum, ep.path, prop.can_key)) {
                    if (label == f->label_a)
                        label = f->label_b;
                    else if (label == f->label_b)
                        label = f->label_a;
                }
                if (prop.kind == RigPropKind::boolean) return json(label == "TRUE");
                return json(label);
            }
            case RigPropKind::numeric: {
                double vv_raw = receive(ep.path, prop.can_key).value_or(0.0);
                double can_raw = prop.can_to_vv.inverse().apply(vv_raw);
                if (const FaultSpec* f =
                        fault_for(FaultKind::wrong_scale, ep.path, prop.can_key))
                    can_raw *= f->factor;
                double api = fault_for(FaultKind::wrong_unit, ep.path, prop.can_key)
                                 ? can_raw
                                 : prop.api_to_can.inverse().apply(can_raw);
                return json(api);
            }
            case RigPropKind::datetime: {
                double h = receive(ep.path, prop.hours_can_key).value_or(0.0);
                double m = receive(ep.path, prop.minutes_can_key).value_or(0.0);
                return json(format_hhmm(static_cast<int64_t>(h), static_cast<int64_t>(m)));
            }
        }
        return json();
    }

    /// Reads the VV state behind one label's signal. Only the first label of
    /// a signal emits the frame, so one property read is one frame per
    /// distinct signal.
    std::optional<double> receive_for_label(const RigEndpointConfig& ep,
                                            const RigPropertyConfig& prop,
                                            const RigLabelMap& l) {
        for (const auto& other : prop.labels) {
            if (&other == &l) break;
            if (other.can_key == l.can_key) {
                // already received this tick; read the table silently
                const std::string& vv_key = binding(l.can_key);
                return current_vv(vv_key);
            }
        }
        return receive(ep.path, l.can_key);
    }

    RigConfig config_;
    std::vector<FaultSpec> faults_;
    std::set<std::string> vv_keys_;
    std::map<std::string, double> vv_;
    std::map<std::string, double> vv_prev_;
    std::map<std::string, bool> stale_pending_;
    std::vector<CanFrame> trace_;
    int64_t tick_ = 0;
    mutable std::mutex mutex_;
};

// --- JSON bindings for rig config files and /_fault bodies ---

inline void to_json(json& j, const FaultSpec& f) {
    j = json{{"kind", to_string(f.kind)}, {"target", f.target}};
    if (f.kind == FaultKind::wrong_scale) j["factor"] = f.factor;
    if (f.kind == FaultKind::swapped_enum) {
        j["label_a"] = f.label_a;
        j["label_b"] = f.label_b;
    }
}

inline void from_json(const json& j, FaultSpec& f) {
    f = FaultSpec{};
    f.kind = fault_kind_from_string(j.at("kind").get<std::string>());
    f.target = j.at("target").get<std::string>();
    if (j.contains("factor")) f.factor = j["factor"].get<double>();
    if (j.contains("label_a")) f.label_a = j["label_a"].get<std::string>();
    if (j.contains("label_b")) f.label_b = j["label_b"].get<std::string>();
}

inline void to_json(json& j, const RigLabelMap& l) {
    j = json{{"api_label", l.api_label},
             {"can_key", l.can_key},
             {"can_raw", l.can_raw},
             {"vv_raw", l.vv_raw}};
}

inline void from_json(const json& j, RigLabelMap& l) {
    l.api_label = j.at("api_label").get<std::string>();
    l.can_key = j.at("can_key").get<std::string>();
    l.can_raw = j.at("can_raw").get<int64_t>();
    l.vv_raw = j.at("vv_raw").get<double>();
}

inline void to_json(json& j, const RigPropertyConfig& p) {
    j = json{{"key", p.key}, {"kind", to_string(p.kind)}};
    if (p.kind == RigPropKind::datetime) {
        j["hours_can_key"] = p.hours_can_key;
        j["minutes_can_key"] = p.minutes_can_key;
        return;
    }
    j["can_key"] = p.can_key;
    if (p.kind == RigPropKind::numeric) {
        j["api_to_can"] = p.api_to_can;
        j["can_to_vv"] = p.can_to_vv;
    } else {
        j["labels"] = p.labels;
    }
}

inline void from_json(const json& j, RigPropertyConfig& p) {
    p = RigPropertyConfig{};
    p.key = j.at("key").get<std::string>();
    p.kind = rig_prop_kind_from_string(j.at("kind").get<std::string>());
    if (p.kind == RigPropKind::datetime) {
        p.hours_can_key = j.at("hours_can_key").get<std::string>();
        p.minutes_can_key = j.at("minutes_can_key").get<std::string>();
        return;
    }
    p.can_key = j.at("can_key").get<std::string>();
    if (p.kind == RigPropKind::numeric) {
        p.api_to_can = j.at("api_to_can").get<Rational>();
        p.can_to_vv = j.at("can_to_vv").get<Rational>();
    } else {
        p.labels = j.at("labels").get<std::vector<RigLabelMap>>();
    }
}

inline void to_json(json& j, const RigEndpointConfig& e) {
    json methods = json::array();
    for (Method m : e.methods) methods.push_back(to_string(m));
    j = json{{"path", e.path}, {"methods", methods}, {"properties", e.properties}};
}

inline void from_json(const json& j, RigEndpointConfig& e) {
    e = RigEndpointConfig{};
    e.path = j.at("path").get<std::string>();
    for (const auto& m : j.at("methods")) e.methods.push_back(method_from_string(m.get<std::string>()));
    e.properties = j.at("properties").get<std::vector<RigPropertyConfig>>();
}

inline void to_json(json& j, const RigConfig& c) {
    j = json{{"endpoints", c.endpoints},
             {"vv_bindings", c.vv_bindings},
             {"vv_defaults", c.vv_defaults},
             {"faults", c.faults}};
}

inline void from_json(const json& j, RigConfig& c) {
    c = RigConfig{};
    c.endpoints = j.at("endpoints").get<std::vector<RigEndpointConfig>>();
    c.vv_bindings = j.at("vv_bindings").get<std::map<std::string, std::string>>();
    c.vv_defaults = j.at("vv_defaults").get<std::map<std::string, double>>();
    c.faults = j.at("faults").get<std::vector<FaultSpec>>();
}

inline RigConfig parse_rig_config(std::string_view document) {
    try {
        return json::parse(document).get<RigConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace vapitest
